//! Rolling estimation, per-period simulation of the test portfolio, and the
//! coverage of realized returns by the simulated bands.

use serde::{Deserialize, Serialize};

use super::portfolio::{portfolio_log_return, PortfolioSpec};
use super::simulate::{simulate_return_distribution, Measure, ParameterProcess};
use super::stats::{coverage_test, CoverageReport, SummaryStats};
use super::BacktestError;
use crate::crc::{crc_init, CrcState, MarketPriceOfRisk};
use crate::curve::YieldCurve;
use crate::data::{interpolate_to_grid, panel_on_grid, YieldPanel};
use crate::estimation::{rolling_estimate, EstimationConfig, EstimationResult, WindowFailure};
use crate::numerics::{self, solve_lower_triangular};
use crate::stochvol::{average_correlation, fit_stochvol, StochVolParams};
use crate::vasicek::VasicekParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BacktestConfig {
    pub portfolio: PortfolioSpec,
    pub paths: usize,
    /// Nominal coverage of the simulated band.
    pub level: f64,
    /// Keep every second period in the binomial test.
    pub thin: bool,
    /// Also simulate the stochastic-volatility model.
    pub stochvol: bool,
    /// Number of past estimates used to fit the volatility process.
    pub stochvol_window: usize,
    pub zero_cross: bool,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            portfolio: PortfolioSpec::default(),
            paths: 10_000,
            level: 0.95,
            thin: false,
            stochvol: true,
            stochvol_window: 252,
            zero_cross: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBand {
    pub lower: f64,
    pub upper: f64,
    pub stats: SummaryStats,
    pub exceeded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodResult {
    pub start: usize,
    pub end: usize,
    pub realized: f64,
    pub vasicek: ModelBand,
    pub stochvol: Option<ModelBand>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub periods: Vec<PeriodResult>,
    pub vasicek: CoverageReport,
    pub stochvol: Option<CoverageReport>,
    pub window_failures: Vec<WindowFailure>,
    /// Periods skipped because the model could not be set up.
    pub skipped: Vec<(usize, String)>,
}

/// Starting state from an estimate: the filtered factor is shifted in its
/// first component so that the spot rate matches the curve.
pub fn state_from_estimate(est: &EstimationResult, curve: YieldCurve, delta: f64) -> Result<CrcState, BacktestError> {
    let params = VasicekParams::new(est.b.clone(), est.beta.clone(), est.sigma_sqrt.clone(), delta)?;
    let mut x = est.x_filtered.clone();
    x[0] += curve.spot() - x.iter().sum::<f64>();
    let state = crc_init(params, x, curve)?;
    let mpr = MarketPriceOfRisk::new(est.lambda.clone(), est.big_lambda.clone())?;
    Ok(state.with_market_price(mpr)?)
}

/// Volatility process fitted to the estimates `history` (consecutive windows).
pub fn stochvol_from_history(history: &[EstimationResult]) -> Result<StochVolParams, BacktestError> {
    let variances: Vec<Vec<f64>> = history.iter().map(|e| e.sigma().diag()).collect();
    let corr = average_correlation(&history.iter().map(EstimationResult::sigma).collect::<Vec<_>>())?;
    let consecutive = history.windows(2).all(|w| w[1].t == w[0].t + 1);
    let residuals = if consecutive {
        Some(
            history
                .windows(2)
                .map(|w| {
                    let e = &w[1];
                    let pred = numerics::add(&e.a, &e.alpha.mul_vec(&w[0].x_filtered));
                    solve_lower_triangular(&e.sigma_sqrt, &numerics::sub(&e.x_filtered, &pred))
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(crate::error::ModelError::from)?,
        )
    } else {
        None
    };
    Ok(fit_stochvol(&variances, residuals.as_deref(), corr)?)
}

fn band(sample: &SummaryStats, realized: f64) -> ModelBand {
    let (lower, upper) = (sample.quantiles[0].1, sample.quantiles[1].1);
    ModelBand {
        lower,
        upper,
        stats: sample.clone(),
        exceeded: realized < lower || realized > upper,
    }
}

fn period_seed(seed: u64, period: usize, model: u64) -> u64 {
    seed ^ (period as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ model.wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Estimates on `panel`, then for every disjoint holding period starting at
/// a window end simulates the portfolio under the estimated model (and the
/// stochastic-volatility variant) and checks the realized return against
/// the central `level` band.
pub fn run_backtest(
    panel: &YieldPanel,
    est: &EstimationConfig,
    cfg: &BacktestConfig,
    seed: u64,
) -> Result<BacktestReport, BacktestError> {
    cfg.portfolio.validate()?;
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(BacktestError::Invalid("coverage level must lie in (0, 1)".into()));
    }
    let delta = est.delta;
    let rows = panel_on_grid(panel, &est.tau)?;
    let rolling = rolling_estimate(&rows, est)?;
    let h = cfg.portfolio.horizon;
    let m = cfg.portfolio.max_maturity().max(h + 2);
    let tail = 0.5 * (1.0 - cfg.level);
    let levels = [tail, 1.0 - tail];

    let mut periods = Vec::new();
    let mut skipped = Vec::new();
    let Some(first) = rolling.results.first().map(|r| r.t) else {
        return Err(BacktestError::Invalid("no estimation window succeeded".into()));
    };
    let mut t = first;
    let mut index = 0;
    while t + h < panel.len() {
        let Some(pos) = rolling.results.iter().position(|r| r.t == t) else {
            skipped.push((t, "no estimate for this date".into()));
            t += h;
            continue;
        };
        let est_t = &rolling.results[pos];
        let outcome = (|| -> Result<PeriodResult, BacktestError> {
            let start_curve = YieldCurve::new(interpolate_to_grid(panel, t, m)?)?;
            let end_curve = YieldCurve::new(interpolate_to_grid(panel, t + h, m)?)?;
            let realized = portfolio_log_return(&start_curve, &end_curve, &cfg.portfolio, delta)?;
            let init = state_from_estimate(est_t, start_curve, delta)?;
            let vas = simulate_return_distribution(
                &init,
                &ParameterProcess::Constant,
                &cfg.portfolio,
                Measure::P,
                cfg.paths,
                period_seed(seed, index, 0),
                &levels,
            )?;
            // too short a history leaves only the constant-parameter band
            let lo = (pos + 1).saturating_sub(cfg.stochvol_window);
            let fitted = if cfg.stochvol { stochvol_from_history(&rolling.results[lo..=pos]).ok() } else { None };
            let stochvol = match fitted {
                Some(svp) => {
                    let process = ParameterProcess::StochVol {
                        params: svp,
                        zero_cross: cfg.zero_cross,
                    };
                    let s = simulate_return_distribution(
                        &init,
                        &process,
                        &cfg.portfolio,
                        Measure::P,
                        cfg.paths,
                        period_seed(seed, index, 1),
                        &levels,
                    )?;
                    Some(band(&s.stats, realized))
                }
                None => None,
            };
            Ok(PeriodResult {
                start: t,
                end: t + h,
                realized,
                vasicek: band(&vas.stats, realized),
                stochvol,
            })
        })();
        match outcome {
            Ok(p) => periods.push(p),
            Err(e) => skipped.push((t, e.to_string())),
        }
        index += 1;
        t += h;
    }
    if periods.is_empty() {
        return Err(BacktestError::Invalid(format!(
            "no holding period could be evaluated ({} skipped)",
            skipped.len()
        )));
    }
    let realized: Vec<f64> = periods.iter().map(|p| p.realized).collect();
    let vb: Vec<(f64, f64)> = periods.iter().map(|p| (p.vasicek.lower, p.vasicek.upper)).collect();
    let vasicek = coverage_test(&vb, &realized, cfg.level, cfg.thin);
    let stochvol = if cfg.stochvol {
        let pairs: Vec<((f64, f64), f64)> = periods
            .iter()
            .filter_map(|p| p.stochvol.as_ref().map(|b| ((b.lower, b.upper), p.realized)))
            .collect();
        let (b, r): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        (!b.is_empty()).then(|| coverage_test(&b, &r, cfg.level, cfg.thin))
    } else {
        None
    };
    Ok(BacktestReport {
        periods,
        vasicek,
        stochvol,
        window_failures: rolling.failures,
        skipped,
    })
}
