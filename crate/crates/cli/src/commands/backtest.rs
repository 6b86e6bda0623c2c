use serde::Serialize;
use vasicek_crc::backtest::{run_backtest, CoverageReport, ModelBand};
use vasicek_crc::estimation::WindowFailure;

use super::{init_threads, load_clean_panel, load_config, sync_delta, Outcome};
use crate::args::BacktestArgs;
use crate::error::CliError;
use crate::output::{create_with_header, sibling, write_json, Provenance};

#[derive(Serialize)]
struct Summary<'a> {
    provenance: Provenance,
    periods: usize,
    vasicek: &'a CoverageReport,
    stochvol: &'a Option<CoverageReport>,
    window_failures: &'a [WindowFailure],
    skipped: &'a [(usize, String)],
}

fn band_cells(b: Option<&ModelBand>) -> Vec<String> {
    match b {
        None => vec![String::new(); 7],
        Some(b) => vec![
            format!("{:?}", b.lower),
            format!("{:?}", b.upper),
            format!("{:?}", b.stats.mean),
            format!("{:?}", b.stats.std),
            format!("{:?}", b.stats.skewness),
            format!("{:?}", b.stats.excess_kurtosis),
            b.exceeded.to_string(),
        ],
    }
}

pub fn run(a: BacktestArgs, threads: Option<usize>) -> Result<Outcome, CliError> {
    let mut cfg = load_config(&a.common)?;
    if let Some(k) = a.window {
        cfg.estimation.window = k;
    }
    if let Some(n) = a.factors {
        cfg.estimation.factors = n;
    }
    if let Some(p) = a.paths {
        cfg.backtest.paths = p;
    }
    init_threads(threads, &cfg)?;
    let panel = load_clean_panel(&a.data, &cfg)?;
    sync_delta(&panel, &mut cfg)?;
    let report = run_backtest(&panel, &cfg.estimation, &cfg.backtest, cfg.seed)?;

    let mut w = csv::Writer::from_writer(create_with_header(&a.out, &cfg)?);
    let mut header: Vec<String> = ["start", "end", "start_date", "end_date", "realized"].map(String::from).to_vec();
    for model in ["vasicek", "stochvol"] {
        for f in ["lower", "upper", "mean", "std", "skewness", "excess_kurtosis", "exceeded"] {
            header.push(format!("{model}_{f}"));
        }
    }
    w.write_record(&header)?;
    let dates = panel.dates();
    for p in &report.periods {
        let mut row = vec![
            p.start.to_string(),
            p.end.to_string(),
            dates[p.start].to_string(),
            dates[p.end].to_string(),
            format!("{:?}", p.realized),
        ];
        row.extend(band_cells(Some(&p.vasicek)));
        row.extend(band_cells(p.stochvol.as_ref()));
        w.write_record(&row)?;
    }
    w.flush()?;

    let summary = Summary {
        provenance: Provenance::of(&cfg),
        periods: report.periods.len(),
        vasicek: &report.vasicek,
        stochvol: &report.stochvol,
        window_failures: &report.window_failures,
        skipped: &report.skipped,
    };
    write_json(&a.summary.clone().unwrap_or_else(|| sibling(&a.out, ".summary.json")), &summary)?;
    let v = &report.vasicek;
    eprintln!(
        "{} periods; constant model: {} exceedances, p = {:.4}",
        v.periods, v.exceedances, v.p_value
    );
    if let Some(s) = &report.stochvol {
        eprintln!("stochastic volatility: {} of {} exceeded, p = {:.4}", s.exceedances, s.periods, s.p_value);
    }
    for (t, why) in &report.skipped {
        eprintln!("period starting {} skipped: {why}", dates[*t]);
    }
    let partial = !report.window_failures.is_empty() || !report.skipped.is_empty();
    Ok(if partial { Outcome::Partial } else { Outcome::Complete })
}
