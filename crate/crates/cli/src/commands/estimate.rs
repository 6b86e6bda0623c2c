use vasicek_crc::data::panel_on_grid;
use vasicek_crc::estimation::{rolling_estimate, write_results_csv};

use super::{init_threads, load_clean_panel, load_config, sync_delta, Outcome};
use crate::args::EstimateArgs;
use crate::error::CliError;
use crate::model_file::ModelFile;
use crate::output::{create_with_header, write_json, Provenance};

pub fn run(a: EstimateArgs, threads: Option<usize>) -> Result<Outcome, CliError> {
    let mut cfg = load_config(&a.common)?;
    if let Some(k) = a.window {
        cfg.estimation.window = k;
    }
    if let Some(n) = a.factors {
        cfg.estimation.factors = n;
    }
    init_threads(threads, &cfg)?;
    let panel = load_clean_panel(&a.data, &cfg)?;
    sync_delta(&panel, &mut cfg)?;
    let rows = panel_on_grid(&panel, &cfg.estimation.tau)?;
    let out = rolling_estimate(&rows, &cfg.estimation)?;
    let dates: Vec<String> = panel.dates().iter().map(|d| d.to_string()).collect();
    let w = create_with_header(&a.out, &cfg)?;
    write_results_csv(w, &out.results, Some(&dates))?;
    for f in &out.failures {
        eprintln!("window ending {} failed: {}", dates[f.t], f.error);
    }
    eprintln!("{} windows estimated, {} failed", out.results.len(), out.failures.len());
    if let Some(path) = &a.params_out {
        let last = out
            .results
            .last()
            .ok_or_else(|| CliError::Failed("no window succeeded; no model to write".into()))?;
        write_json(path, &ModelFile::from_estimate(last, cfg.estimation.delta, Provenance::of(&cfg)))?;
    }
    Ok(if out.failures.is_empty() { Outcome::Complete } else { Outcome::Partial })
}
