use std::io::Write;

use vasicek_crc::data::interpolate_to_grid;
use vasicek_crc::hull_white::{calibrate_theta, extended_yield_curve};
use vasicek_crc::vasicek::FactorState;
use vasicek_crc::YieldCurve;

use super::{date_index, default_max_lag, init_threads, load_clean_panel, load_config, Outcome};
use crate::args::CalibrateArgs;
use crate::error::CliError;
use crate::model_file::ModelFile;
use crate::output::{create_with_header, sibling};

pub fn run(a: CalibrateArgs, threads: Option<usize>) -> Result<Outcome, CliError> {
    let cfg = load_config(&a.common)?;
    init_threads(threads, &cfg)?;
    let panel = load_clean_panel(&a.data, &cfg)?;
    let t = date_index(&panel, Some(&a.date))?;
    let m = default_max_lag(&panel, a.max_lag);
    if m < 2 {
        return Err(CliError::Usage("--max-lag must be at least 2".into()));
    }
    let target = YieldCurve::new(interpolate_to_grid(&panel, t, m)?)?;
    let model = ModelFile::load(&a.params)?;
    let params = model.params(panel.delta()?)?;
    let x = model.factor_for_spot(target.spot());
    let hwx = calibrate_theta(&params, 0, &x, &target)?;
    let repriced = extended_yield_curve(&params, &hwx, &FactorState::new(x, 0)?, m)?;

    let mut w = create_with_header(&a.out, &cfg)?;
    writeln!(w, "i,theta")?;
    for (i, th) in hwx.values().iter().enumerate() {
        writeln!(w, "{},{th:?}", i + 1)?;
    }
    w.flush()?;

    let report = a.report.clone().unwrap_or_else(|| sibling(&a.out, ".residuals.csv"));
    let mut r = create_with_header(&report, &cfg)?;
    writeln!(r, "lag,target,model,residual")?;
    let mut worst: f64 = 0.0;
    for lag in 1..=m {
        let (y, z) = (target.at(lag), repriced.at(lag));
        worst = worst.max((z - y).abs());
        writeln!(r, "{lag},{y:?},{z:?},{:?}", z - y)?;
    }
    r.flush()?;
    eprintln!("theta for lags 2..={m} on {}; largest re-pricing residual {worst:e}", a.date);
    Ok(Outcome::Complete)
}
