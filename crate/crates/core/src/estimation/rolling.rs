//! Window-by-window estimation over a yield panel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kalman::{check_tau, kalman_filter, StateSpaceSpec};
use super::market_price::infer_market_price;
use super::mle::{cross_section_factor, fit_drift_mle, DriftStart, MleOptions};
use super::rcov::{fit_beta_sigma_rcov, realized_cov_matrix, RcovOptions, Weights};
use super::result::EstimationResult;
use super::EstimationError;
use crate::numerics::Matrix;
use crate::vasicek::VasicekParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationConfig {
    pub window: usize,
    pub factors: usize,
    /// Lags (in steps of `delta`) of the panel columns.
    pub tau: Vec<usize>,
    pub delta: f64,
    /// Measurement noise variance `s`, with `S = s·𝟙`, in squared yield units.
    pub noise_variance: f64,
    /// Rows between consecutive window ends.
    pub stride: usize,
    pub weights: Weights,
    pub rcov: RcovOptions,
    pub mle: MleOptions,
    /// Run windows independently in parallel with cold starts.
    pub parallel: bool,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            window: 126,
            factors: 3,
            tau: vec![1, 2, 5, 10, 21, 63],
            delta: 1.0 / 252.0,
            // 10⁻⁵ in percent² is 10⁻⁹ for decimal yields
            noise_variance: 1e-9,
            stride: 1,
            weights: Weights::Diagonal,
            rcov: RcovOptions::default(),
            mle: MleOptions::default(),
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowFailure {
    pub t: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RollingOutput {
    pub results: Vec<EstimationResult>,
    pub failures: Vec<WindowFailure>,
}

struct Warm {
    x_init: Vec<f64>,
    start: DriftStart,
}

struct WindowFit {
    result: EstimationResult,
    next: Warm,
}

fn estimate_window(
    panel: &[Vec<f64>],
    t: usize,
    cfg: &EstimationConfig,
    warm: Option<&Warm>,
) -> Result<WindowFit, EstimationError> {
    let k = cfg.window;
    let rows = &panel[t - k..=t];
    let rcov = realized_cov_matrix(rows)?;
    let fit = fit_beta_sigma_rcov(&rcov, &cfg.tau, &cfg.weights, cfg.factors, &cfg.rcov)?;
    let n = cfg.factors;
    let s = Matrix::identity(cfg.tau.len()).scale(cfg.noise_variance);
    let (x_init, start) = match warm {
        Some(w) => (w.x_init.clone(), w.start.clone()),
        None => {
            let p0 = VasicekParams::new(vec![0.0; n], fit.beta.clone(), fit.sigma_sqrt.clone(), cfg.delta)?;
            (cross_section_factor(&p0, &cfg.tau, &rows[0])?, DriftStart::neutral(&fit.beta))
        }
    };
    let obs = &rows[1..];
    let drift = fit_drift_mle(obs, &cfg.tau, cfg.delta, &fit.beta, &fit.sigma_sqrt, &s, &x_init, &start, &cfg.mle)?;
    let mpr = infer_market_price(&drift.b, &drift.a, &fit.beta, &drift.alpha, &fit.sigma_sqrt)?;

    // the next window is anchored `stride` rows later
    let next_x = if cfg.stride == 1 {
        drift.first_filtered.clone()
    } else {
        let params = VasicekParams::new(drift.b.clone(), fit.beta.clone(), fit.sigma_sqrt.clone(), cfg.delta)?;
        let spec = StateSpaceSpec::from_model(&params, drift.a.clone(), drift.alpha.clone(), cfg.tau.clone(), s)?;
        let path = kalman_filter(&spec, &obs[..cfg.stride.min(k)], &x_init, &cfg.mle.kalman)?;
        path.states.last().expect("non-empty").x_upd.clone()
    };
    let next = Warm {
        x_init: next_x,
        start: DriftStart {
            b: drift.b.clone(),
            a: drift.a.clone(),
            alpha: drift.alpha.diag(),
        },
    };
    Ok(WindowFit {
        result: EstimationResult {
            t,
            b: drift.b,
            beta: fit.beta,
            sigma_sqrt: fit.sigma_sqrt,
            a: drift.a,
            alpha: drift.alpha,
            lambda: mpr.lambda,
            big_lambda: mpr.big_lambda,
            loglik: drift.loglik,
            x_filtered: drift.last_filtered,
            rcov_objective: fit.objective,
            rcov_converged: fit.converged,
            mle_converged: drift.converged,
            mle_outer_iterations: drift.outer_iterations,
        },
        next,
    })
}

/// Estimates every window ending at rows `K, K+stride, …` of `panel`
/// (rows are dates, columns follow `cfg.tau`).
///
/// Sequential runs warm-start each window from the previous fit and anchor
/// the filter at the previous window's filtered factor. The first window, and
/// any window after a failure, anchors at the cross-sectional least-squares
/// factor of its first row.
pub fn rolling_estimate(panel: &[Vec<f64>], cfg: &EstimationConfig) -> Result<RollingOutput, EstimationError> {
    check_tau(&cfg.tau)?;
    if cfg.window < 2 {
        return Err(EstimationError::InvalidConfig("window must span at least two increments".into()));
    }
    if cfg.stride == 0 {
        return Err(EstimationError::InvalidConfig("stride must be positive".into()));
    }
    if cfg.factors == 0 || cfg.factors > cfg.tau.len() {
        return Err(EstimationError::InvalidConfig(format!(
            "factor count {} must be between 1 and the number of maturities {}",
            cfg.factors,
            cfg.tau.len()
        )));
    }
    if !(cfg.noise_variance >= 0.0) || !(cfg.delta > 0.0) {
        return Err(EstimationError::InvalidConfig("noise variance and delta must be nonnegative and positive".into()));
    }
    if panel.len() < cfg.window + 1 {
        return Err(EstimationError::InsufficientData {
            needed: cfg.window + 1,
            found: panel.len(),
        });
    }
    if let Some(row) = panel.iter().find(|r| r.len() != cfg.tau.len()) {
        return Err(EstimationError::Dimension {
            what: "yield panel row",
            expected: cfg.tau.len(),
            found: row.len(),
        });
    }
    let ends: Vec<usize> = (cfg.window..panel.len()).step_by(cfg.stride).collect();
    let mut out = RollingOutput::default();
    if cfg.parallel {
        let fits: Vec<_> = ends.par_iter().map(|&t| (t, estimate_window(panel, t, cfg, None))).collect();
        for (t, fit) in fits {
            match fit {
                Ok(f) => out.results.push(f.result),
                Err(e) => out.failures.push(WindowFailure { t, error: e.to_string() }),
            }
        }
        return Ok(out);
    }
    let mut warm: Option<Warm> = None;
    for t in ends {
        match estimate_window(panel, t, cfg, warm.as_ref()) {
            Ok(f) => {
                out.results.push(f.result);
                warm = Some(f.next);
            }
            Err(e) => {
                out.failures.push(WindowFailure { t, error: e.to_string() });
                warm = None;
            }
        }
    }
    Ok(out)
}
