mod backtest;
mod calibrate;
mod estimate;
mod simulate;

use std::path::Path;

use vasicek_crc::data::{handle_missing, load_panel, RunConfig, YieldPanel};

use crate::args::{Command, Common};
use crate::error::CliError;

/// Successful run; `Partial` maps to exit code 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    Partial,
}

pub fn run(command: Command, threads: Option<usize>) -> Result<Outcome, CliError> {
    match command {
        Command::Estimate(a) => estimate::run(a, threads),
        Command::Calibrate(a) => calibrate::run(a, threads),
        Command::Simulate(a) => simulate::run(a, threads),
        Command::Backtest(a) => backtest::run(a, threads),
    }
}

/// Config file with the common flags applied on top.
fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if common.units.is_some() {
        cfg.units = common.units;
    }
    if let Some(m) = common.missing {
        cfg.missing = m;
    }
    // one seed drives every random choice of a run
    cfg.estimation.rcov.seed = cfg.seed;
    Ok(cfg)
}

/// The flag (or `CRC_THREADS`) wins over the config; all cores otherwise.
fn init_threads(flag: Option<usize>, cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(n) = flag.or(cfg.threads) {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failed(e.to_string()))?;
    }
    Ok(())
}

fn load_clean_panel(path: &Path, cfg: &RunConfig) -> Result<YieldPanel, CliError> {
    let raw = load_panel(path, cfg.units).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let (panel, report) = handle_missing(&raw, cfg.missing)?;
    if !report.filled.is_empty() || !report.dropped.is_empty() {
        eprintln!("cleaning: {report}");
    }
    Ok(panel)
}

/// A `delta` declared by the panel overrides the configured step.
fn sync_delta(panel: &YieldPanel, cfg: &mut RunConfig) -> Result<(), CliError> {
    if panel.metadata().contains_key("delta") {
        let d = panel.delta()?;
        if (d - cfg.estimation.delta).abs() > 1e-15 * d {
            eprintln!("note: using delta = {d} declared by the panel");
        }
        cfg.estimation.delta = d;
    }
    Ok(())
}

fn date_index(panel: &YieldPanel, date: Option<&str>) -> Result<usize, CliError> {
    match date {
        None => Ok(panel.len() - 1),
        Some(s) => {
            let d = s
                .parse()
                .map_err(|e| CliError::Usage(format!("--date `{s}`: {e}")))?;
            panel
                .date_index(d)
                .ok_or_else(|| CliError::Data(format!("date {s} is not in the panel")))
        }
    }
}

fn default_max_lag(panel: &YieldPanel, flag: Option<usize>) -> usize {
    flag.unwrap_or_else(|| *panel.tau_days().last().expect("panel has tenors"))
}
