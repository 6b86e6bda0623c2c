use std::io::Write;

use vasicek_crc::backtest::{simulate_crc_paths, simulate_fan, ParameterProcess};
use vasicek_crc::crc::crc_init;
use vasicek_crc::data::interpolate_to_grid;
use vasicek_crc::stochvol::StochVolParams;
use vasicek_crc::YieldCurve;

use super::{date_index, default_max_lag, init_threads, load_clean_panel, load_config, Outcome};
use crate::args::SimulateArgs;
use crate::error::CliError;
use crate::model_file::ModelFile;
use crate::output::create_with_header;

pub fn run(a: SimulateArgs, threads: Option<usize>) -> Result<Outcome, CliError> {
    let mut cfg = load_config(&a.common)?;
    let sim = &mut cfg.simulation;
    if let Some(m) = a.measure {
        sim.measure = m;
    }
    if let Some(h) = a.horizon {
        sim.horizon = h;
    }
    if let Some(p) = a.paths {
        sim.paths = p;
    }
    if a.zero_cross {
        sim.zero_cross = true;
    }
    if let Some(l) = &a.levels {
        sim.fan_levels = l.clone();
    }
    if sim.fan_levels.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(CliError::Usage("--levels must lie in [0, 1]".into()));
    }
    init_threads(threads, &cfg)?;

    let panel = load_clean_panel(&a.init_curve, &cfg)?;
    let t = date_index(&panel, a.date.as_deref())?;
    let m = default_max_lag(&panel, a.max_lag);
    let explicit_lags = a.lags.is_some();
    if let Some(l) = a.lags {
        cfg.simulation.fan_lags = l;
    }
    let lags: Vec<usize> = if cfg.simulation.fan_lags.is_empty() {
        (1..=m).collect()
    } else if explicit_lags {
        cfg.simulation.fan_lags.clone()
    } else {
        cfg.simulation.fan_lags.iter().copied().filter(|&l| l <= m).collect()
    };
    if let Some(&bad) = lags.iter().find(|&&l| l == 0 || l > m) {
        return Err(CliError::Usage(format!("fan lag {bad} outside 1..={m}")));
    }
    let curve = YieldCurve::new(interpolate_to_grid(&panel, t, m)?)?;
    let model = ModelFile::load(&a.params)?;
    let params = model.params(panel.delta()?)?;
    let x = model.factor_for_spot(curve.spot());
    let init = crc_init(params, x, curve)?.with_market_price(model.market_price()?)?;
    let process = match &a.stochvol {
        None => ParameterProcess::Constant,
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            let params: StochVolParams =
                serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            ParameterProcess::StochVol {
                params,
                zero_cross: cfg.simulation.zero_cross,
            }
        }
    };
    let sim = &cfg.simulation;
    let fan = simulate_fan(&init, &process, sim.measure, sim.horizon, sim.paths, cfg.seed, &lags, &sim.fan_levels)?;
    fan.write_csv(create_with_header(&a.out, &cfg)?)?;

    if let Some(path) = &a.snapshots {
        let paths = simulate_crc_paths(&init, &process, sim.measure, sim.horizon, sim.paths, cfg.seed)?;
        let mut w = create_with_header(path, &cfg)?;
        let mut header = vec!["path".to_string(), "k".to_string()];
        header.extend((1..=init.x.len()).map(|i| format!("x_{i}")));
        header.extend((1..=m).map(|l| format!("y_{l}")));
        writeln!(w, "{}", header.join(","))?;
        for (i, path) in paths.iter().enumerate() {
            for s in path {
                let mut row = vec![i.to_string(), s.k.to_string()];
                row.extend(s.x.iter().chain(s.curve.values()).map(|v| format!("{v:?}")));
                writeln!(w, "{}", row.join(","))?;
            }
        }
        w.flush()?;
    }
    eprintln!("{} paths over {} steps under {:?}", sim.paths, sim.horizon, sim.measure);
    Ok(Outcome::Complete)
}
