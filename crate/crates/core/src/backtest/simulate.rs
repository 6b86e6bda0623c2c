//! Monte Carlo paths of the re-calibrated model with constant or
//! stochastic-volatility parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::portfolio::{log_return_from_log_ratios, PortfolioSpec};
use super::stats::{quantile_sorted, summarize, ReturnSample};
use super::BacktestError;
use crate::crc::{crc_step_hjm, crc_step_real_world, CrcState, MarketPriceOfRisk, ParameterUpdate};
use crate::estimation::infer_market_price;
use crate::hull_white::theta_first_component;
use crate::numerics::{self, Matrix, RngStream};
use crate::stochvol::{assemble_sigma, stochvol_step, InnovationSampler, StochVolParams};
use crate::vasicek::{AffineTable, VasicekParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Measure {
    /// Real world, driven by `ε` with the state's market price of risk.
    #[default]
    P,
    /// Pricing measure, driven by `ε*`.
    Q,
}

impl std::str::FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "P" | "p" => Ok(Measure::P),
            "Q" | "q" => Ok(Measure::Q),
            other => Err(format!("unknown measure `{other}`")),
        }
    }
}

/// How `Σ(k)` evolves along a path. `b`, `β` and the real-world `(a, α)`
/// stay fixed; under stochastic volatility the market price of risk is
/// re-derived from them at every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParameterProcess {
    Constant,
    StochVol {
        params: StochVolParams,
        /// Draw `ε` and `ε̃` independently.
        zero_cross: bool,
    },
}

/// Per-path parameter evolution.
struct ParamDriver {
    base: VasicekParams,
    a: Vec<f64>,
    alpha: Matrix,
    sv: Option<(StochVolParams, InnovationSampler)>,
    sampler_n: usize,
}

struct ParamState {
    params: VasicekParams,
    mpr: MarketPriceOfRisk,
    variances: Vec<f64>,
}

impl ParamDriver {
    fn new(init: &CrcState, process: &ParameterProcess) -> Result<Self, BacktestError> {
        let base = init.params.clone();
        let (a, alpha) = crate::estimation::real_world_transition(base.b(), base.beta(), base.sigma_sqrt(), &init.market_price);
        let sv = match process {
            ParameterProcess::Constant => None,
            ParameterProcess::StochVol { params, zero_cross } => {
                if params.n() != base.n() {
                    return Err(BacktestError::Invalid("stochastic volatility dimension differs from the model".into()));
                }
                Some((params.clone(), params.sampler(*zero_cross)?))
            }
        };
        Ok(Self {
            sampler_n: base.n(),
            base,
            a,
            alpha,
            sv,
        })
    }

    fn initial(&self, init: &CrcState) -> ParamState {
        ParamState {
            params: self.base.clone(),
            mpr: init.market_price.clone(),
            variances: self.base.sigma().diag(),
        }
    }

    /// Draws `ε` and moves the parameters to the next step.
    fn step(&self, state: &ParamState, rng: &mut RngStream) -> Result<(Vec<f64>, Option<ParamState>), BacktestError> {
        match &self.sv {
            None => Ok((rng.standard_normal_vec(self.sampler_n), None)),
            Some((svp, sampler)) => {
                let (eps, tilde) = sampler.draw(rng);
                let variances = stochvol_step(svp, &state.variances, &tilde);
                let (_, root) = assemble_sigma(&variances, svp.corr_factors())?;
                let params = VasicekParams::new(self.base.b().to_vec(), self.base.beta().clone(), root, self.base.delta())?;
                let mpr = infer_market_price(params.b(), &self.a, params.beta(), &self.alpha, params.sigma_sqrt())?;
                Ok((eps, Some(ParamState { params, mpr, variances })))
            }
        }
    }
}

/// Log prices of the bonds needed for the portfolio return and for the lag-1
/// and lag-2 yields along an `h`-step path, advanced by the HJM recursion.
#[derive(Clone)]
struct BondBook {
    /// Lag at the path start; the lag at step `k` is `initial − k`.
    initial: Vec<usize>,
    log_price: Vec<f64>,
    /// `slot[l]` is the index of the bond with initial lag `l` (for `l ≤ h + 2`).
    slot: Vec<usize>,
}

impl BondBook {
    fn new(curve: &crate::curve::YieldCurve, delta: f64, spec: &PortfolioSpec) -> Result<Self, BacktestError> {
        let h = spec.horizon;
        let mut initial: Vec<usize> = (1..=h + 2).chain(spec.maturities.iter().copied()).collect();
        initial.sort_unstable();
        initial.dedup();
        let max = *initial.last().expect("non-empty");
        if max > curve.len() {
            return Err(BacktestError::LagCoverage { lag: max, len: curve.len() });
        }
        let log_price = initial.iter().map(|&l| -curve.at(l) * l as f64 * delta).collect();
        let mut slot = vec![usize::MAX; h + 3];
        for (i, &l) in initial.iter().enumerate() {
            if l <= h + 2 {
                slot[l] = i;
            }
        }
        Ok(Self { initial, log_price, slot })
    }

    fn log_price_at(&self, k: usize, lag: usize) -> f64 {
        self.log_price[self.slot[k + lag]]
    }

    /// One step from `k` to `k + 1`; returns the new factor.
    fn advance(&mut self, k: usize, params: &VasicekParams, table: &AffineTable, x: &[f64], eps_star: &[f64]) -> Vec<f64> {
        let delta = params.delta();
        let spot_carry = -self.log_price_at(k, 1);
        let y2 = -self.log_price_at(k, 2) / (2.0 * delta);
        let shock = params.sigma_sqrt().mul_vec(eps_star);
        let mut x_new = params.beta().mul_vec(x);
        for i in 0..x_new.len() {
            x_new[i] += params.b()[i] + shock[i];
        }
        x_new[0] += theta_first_component(params, x, y2);
        for (l, lp) in self.initial.iter().zip(self.log_price.iter_mut()) {
            if *l < k + 2 {
                continue;
            }
            let j = l - k - 1;
            if j == 1 {
                *lp = -x_new.iter().sum::<f64>() * delta;
            } else {
                let b = table.b(j);
                *lp += spot_carry - 0.5 * params.sigma_quad(b) - numerics::dot(b, &shock);
            }
        }
        x_new
    }
}

fn check_paths(n_paths: usize) -> Result<(), BacktestError> {
    if n_paths < 2 {
        return Err(BacktestError::Invalid("need at least two paths".into()));
    }
    Ok(())
}

/// Portfolio log-returns over `spec.horizon` steps on `n_paths` independent
/// paths started from `init`. Path `i` uses stream `i` of `seed`.
pub fn simulate_portfolio_returns(
    init: &CrcState,
    process: &ParameterProcess,
    spec: &PortfolioSpec,
    measure: Measure,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<f64>, BacktestError> {
    spec.validate()?;
    check_paths(n_paths)?;
    let driver = ParamDriver::new(init, process)?;
    let delta = init.params.delta();
    let table = AffineTable::new(&init.params, spec.max_maturity())?;
    let book0 = BondBook::new(&init.curve, delta, spec)?;
    let start_log: Vec<f64> = spec
        .maturities
        .iter()
        .map(|m| book0.log_price[book0.initial.binary_search(m).expect("tracked")])
        .collect();
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            let mut book = book0.clone();
            let mut ps = driver.initial(init);
            let mut x = init.x.clone();
            for k in 0..spec.horizon {
                let (eps, next) = driver.step(&ps, &mut rng)?;
                let eps_star = match measure {
                    Measure::Q => eps,
                    Measure::P => numerics::sub(&eps, &ps.mpr.shift(&x)),
                };
                x = book.advance(k, &ps.params, &table, &x, &eps_star);
                if let Some(n) = next {
                    ps = n;
                }
            }
            let ratios: Vec<f64> = spec
                .maturities
                .iter()
                .zip(&start_log)
                .map(|(m, s0)| book.log_price[book.initial.binary_search(m).expect("tracked")] - s0)
                .collect();
            Ok(log_return_from_log_ratios(&ratios))
        })
        .collect()
}

pub fn simulate_return_distribution(
    init: &CrcState,
    process: &ParameterProcess,
    spec: &PortfolioSpec,
    measure: Measure,
    n_paths: usize,
    seed: u64,
    levels: &[f64],
) -> Result<ReturnSample, BacktestError> {
    let returns = simulate_portfolio_returns(init, process, spec, measure, n_paths, seed)?;
    let stats = summarize(&returns, levels);
    Ok(ReturnSample { returns, stats })
}

/// Walks path `index` of `seed`, handing every state after `init` to `visit`.
fn walk_path<F: FnMut(&CrcState)>(
    init: &CrcState,
    driver: &ParamDriver,
    measure: Measure,
    horizon: usize,
    rng: &mut RngStream,
    mut visit: F,
) -> Result<(), BacktestError> {
    let mut ps = driver.initial(init);
    let mut cur = init.clone();
    for _ in 0..horizon {
        let (eps, next) = driver.step(&ps, rng)?;
        if let Some(n) = next {
            ps = n;
        }
        let update = ParameterUpdate::with_market_price(ps.params.clone(), ps.mpr.clone());
        cur = match measure {
            Measure::Q => crc_step_hjm(&cur, &update, &eps)?,
            Measure::P => crc_step_real_world(&cur, &update, &eps)?,
        };
        visit(&cur);
    }
    Ok(())
}

/// Full-curve paths: `horizon + 1` states per path, starting with `init`.
/// Uses the same random stream layout as [`simulate_portfolio_returns`].
pub fn simulate_crc_paths(
    init: &CrcState,
    process: &ParameterProcess,
    measure: Measure,
    horizon: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<Vec<CrcState>>, BacktestError> {
    if n_paths == 0 {
        return Err(BacktestError::Invalid("need at least one path".into()));
    }
    let driver = ParamDriver::new(init, process)?;
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut path = Vec::with_capacity(horizon + 1);
            path.push(init.clone());
            walk_path(init, &driver, measure, horizon, &mut RngStream::new(seed, i as u64), |s| path.push(s.clone()))?;
            Ok(path)
        })
        .collect()
}

/// Pointwise quantiles of simulated yields: `quantiles[k][j][q]` is the
/// `levels[q]` quantile of the lag-`lags[j]` yield after `k` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldFan {
    pub lags: Vec<usize>,
    pub levels: Vec<f64>,
    pub quantiles: Vec<Vec<Vec<f64>>>,
}

impl YieldFan {
    /// Long format `step,lag,level,yield`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "lag", "level", "yield"])?;
        for (k, per_lag) in self.quantiles.iter().enumerate() {
            for (lag, qs) in self.lags.iter().zip(per_lag) {
                for (level, q) in self.levels.iter().zip(qs) {
                    w.write_record([k.to_string(), lag.to_string(), format!("{level:?}"), format!("{q:?}")])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Quantile fan over `horizon` steps, keeping only the requested lags per
/// path. Same random stream layout as [`simulate_crc_paths`].
#[allow(clippy::too_many_arguments)]
pub fn simulate_fan(
    init: &CrcState,
    process: &ParameterProcess,
    measure: Measure,
    horizon: usize,
    n_paths: usize,
    seed: u64,
    lags: &[usize],
    levels: &[f64],
) -> Result<YieldFan, BacktestError> {
    check_paths(n_paths)?;
    if let Some(&lag) = lags.iter().find(|&&l| l == 0 || l > init.m()) {
        return Err(BacktestError::LagCoverage { lag, len: init.m() });
    }
    let driver = ParamDriver::new(init, process)?;
    let pick = |s: &CrcState| lags.iter().map(|&l| s.curve.at(l)).collect::<Vec<f64>>();
    let paths: Vec<Vec<Vec<f64>>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::with_capacity(horizon);
            walk_path(init, &driver, measure, horizon, &mut RngStream::new(seed, i as u64), |s| out.push(pick(s)))?;
            Ok(out)
        })
        .collect::<Result<_, BacktestError>>()?;
    let mut quantiles = vec![lags.iter().map(|&l| vec![init.curve.at(l); levels.len()]).collect::<Vec<_>>()];
    let mut column = vec![0.0; n_paths];
    for k in 0..horizon {
        let mut per_lag = Vec::with_capacity(lags.len());
        for j in 0..lags.len() {
            for (c, p) in column.iter_mut().zip(&paths) {
                *c = p[k][j];
            }
            column.sort_by(f64::total_cmp);
            per_lag.push(levels.iter().map(|&q| quantile_sorted(&column, q)).collect());
        }
        quantiles.push(per_lag);
    }
    Ok(YieldFan {
        lags: lags.to_vec(),
        levels: levels.to_vec(),
        quantiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backtest::portfolio::portfolio_log_return;
    use crate::crc::crc_init;
    use crate::curve::YieldCurve;

    fn init_state(m: usize) -> CrcState {
        let p = VasicekParams::new(
            vec![0.0001, -0.00005],
            Matrix::from_diag(&[0.995, 0.9]),
            Matrix::from_rows(&[vec![0.004, 0.0], vec![-0.002, 0.003]]).unwrap(),
            1.0 / 252.0,
        )
        .unwrap();
        let y: Vec<f64> = (1..=m).map(|l| 0.01 + 0.01 * (1.0 - (-(l as f64) / 40.0).exp())).collect();
        let x0 = vec![0.006, y[0] - 0.006];
        let s = crc_init(p, x0, YieldCurve::new(y).unwrap()).unwrap();
        let mpr = MarketPriceOfRisk::new(vec![0.05, -0.02], Matrix::from_diag(&[-1.0, 2.0])).unwrap();
        s.with_market_price(mpr).unwrap()
    }

    fn stochvol() -> StochVolParams {
        StochVolParams::new(
            vec![1e-7, 1e-7],
            vec![0.99, 0.98],
            Matrix::from_diag(&[3e-4, 2e-4]),
            Matrix::from_rows(&[vec![1.0, -0.4], vec![-0.4, 1.0]]).unwrap(),
            Matrix::from_rows(&[vec![-0.3, 0.0], vec![0.0, 0.2]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn sparse_book_matches_full_curve_paths() {
        let init = init_state(60);
        let spec = PortfolioSpec::new(vec![10, 25, 60], 7).unwrap();
        for process in [ParameterProcess::Constant, ParameterProcess::StochVol { params: stochvol(), zero_cross: false }] {
            for measure in [Measure::P, Measure::Q] {
                let fast = simulate_portfolio_returns(&init, &process, &spec, measure, 4, 9).unwrap();
                let paths = simulate_crc_paths(&init, &process, measure, 7, 4, 9).unwrap();
                for (r, path) in fast.iter().zip(&paths) {
                    let full = portfolio_log_return(&path[0].curve, &path[7].curve, &spec, 1.0 / 252.0).unwrap();
                    assert!((r - full).abs() < 1e-12, "{process:?} {measure:?}: {r} vs {full}");
                }
            }
        }
    }

    #[test]
    fn reproducible_under_seed() {
        let init = init_state(60);
        let spec = PortfolioSpec::new(vec![30, 60], 21).unwrap();
        let p = ParameterProcess::StochVol { params: stochvol(), zero_cross: false };
        let a = simulate_return_distribution(&init, &p, &spec, Measure::P, 50, 3, &[0.05, 0.95]).unwrap();
        let b = simulate_return_distribution(&init, &p, &spec, Measure::P, 50, 3, &[0.05, 0.95]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_volatility_is_a_point_mass() {
        let p = VasicekParams::new_allow_singular(vec![0.0], Matrix::from_diag(&[0.9]), Matrix::from_diag(&[0.0]), 1.0 / 252.0).unwrap();
        let init = crc_init(p, vec![0.01], YieldCurve::flat(0.01, 30)).unwrap();
        let spec = PortfolioSpec::new(vec![30], 5).unwrap();
        let s = simulate_return_distribution(&init, &ParameterProcess::Constant, &spec, Measure::Q, 20, 1, &[]).unwrap();
        assert_eq!(s.stats.std, 0.0);
    }

    #[test]
    fn fan_matches_full_paths() {
        let init = init_state(60);
        let p = ParameterProcess::StochVol { params: stochvol(), zero_cross: false };
        let (lags, levels) = ([1, 10, 60], [0.1, 0.5, 0.9]);
        let fan = simulate_fan(&init, &p, Measure::P, 5, 40, 9, &lags, &levels).unwrap();
        let paths = simulate_crc_paths(&init, &p, Measure::P, 5, 40, 9).unwrap();
        assert_eq!(fan.quantiles.len(), 6);
        for k in 0..=5 {
            for (j, &l) in lags.iter().enumerate() {
                let mut col: Vec<f64> = paths.iter().map(|path| path[k].curve.at(l)).collect();
                col.sort_by(f64::total_cmp);
                for (q, &lv) in levels.iter().enumerate() {
                    assert_eq!(fan.quantiles[k][j][q], quantile_sorted(&col, lv));
                }
            }
        }
        let mut csv = Vec::new();
        fan.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 6 * 3 * 3);
        assert!(simulate_fan(&init, &p, Measure::P, 5, 40, 9, &[61], &levels).is_err());
    }
}
