//! Buy-and-hold zero-coupon portfolio held in equal wealth proportions.

use serde::{Deserialize, Serialize};

use super::BacktestError;
use crate::curve::YieldCurve;

/// 2, 3, 4, 5, 6, 9 months and 1, 2, 3, 5, 7, 10 years at 21 days a month.
pub const DEFAULT_MATURITIES: [usize; 12] = [42, 63, 84, 105, 126, 189, 252, 504, 756, 1260, 1764, 2520];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PortfolioSpec {
    /// Lags at purchase.
    pub maturities: Vec<usize>,
    pub horizon: usize,
}

impl Default for PortfolioSpec {
    fn default() -> Self {
        Self {
            maturities: DEFAULT_MATURITIES.to_vec(),
            horizon: 21,
        }
    }
}

impl PortfolioSpec {
    pub fn new(maturities: Vec<usize>, horizon: usize) -> Result<Self, BacktestError> {
        let s = Self { maturities, horizon };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), BacktestError> {
        if self.maturities.is_empty() {
            return Err(BacktestError::Invalid("portfolio needs at least one bond".into()));
        }
        if let Some(m) = self.maturities.iter().find(|&&m| m < self.horizon + 1) {
            return Err(BacktestError::Invalid(format!(
                "maturity {m} does not outlive the holding period {}",
                self.horizon
            )));
        }
        Ok(())
    }

    pub fn max_maturity(&self) -> usize {
        *self.maturities.iter().max().expect("validated non-empty")
    }
}

fn log_price(curve: &YieldCurve, lag: usize, delta: f64) -> Result<f64, BacktestError> {
    if lag == 0 {
        return Ok(0.0);
    }
    if lag > curve.len() {
        return Err(BacktestError::LagCoverage { lag, len: curve.len() });
    }
    Ok(-curve.at(lag) * lag as f64 * delta)
}

/// `log(1 + mean_i R_i)` with `R_i = P_i(t+h)/P_i(t) − 1`; the bond bought
/// at lag `m` is sold at lag `m − h`.
pub fn portfolio_log_return(start: &YieldCurve, end: &YieldCurve, spec: &PortfolioSpec, delta: f64) -> Result<f64, BacktestError> {
    spec.validate()?;
    let log_ratios = spec
        .maturities
        .iter()
        .map(|&m| {
            let bought = log_price(start, m, delta)?;
            Ok(log_price(end, m - spec.horizon, delta)? - bought)
        })
        .collect::<Result<Vec<f64>, BacktestError>>()?;
    Ok(log_return_from_log_ratios(&log_ratios))
}

pub(crate) fn log_return_from_log_ratios(log_ratios: &[f64]) -> f64 {
    let mean: f64 = log_ratios.iter().map(|l| l.exp_m1()).sum::<f64>() / log_ratios.len() as f64;
    mean.ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_zero_curves_give_zero() {
        let c = YieldCurve::flat(0.0, 30);
        let s = PortfolioSpec::new(vec![10, 30], 5).unwrap();
        assert_eq!(portfolio_log_return(&c, &c, &s, 1.0 / 252.0).unwrap(), 0.0);
    }

    #[test]
    fn flat_curve_earns_carry() {
        let c = YieldCurve::flat(0.03, 100);
        let s = PortfolioSpec::new(vec![60], 21).unwrap();
        let delta = 1.0 / 252.0;
        let r = portfolio_log_return(&c, &c, &s, delta).unwrap();
        assert!((r - 0.03 * 21.0 * delta).abs() < 1e-15);
    }

    #[test]
    fn two_bonds_average_simple_returns() {
        let a = YieldCurve::new((1..=40).map(|l| 0.01 + 0.0002 * l as f64).collect()).unwrap();
        let b = YieldCurve::new((1..=40).map(|l| 0.012 + 0.0001 * l as f64).collect()).unwrap();
        let delta = 1.0 / 252.0;
        let r1 = portfolio_log_return(&a, &b, &PortfolioSpec::new(vec![20], 5).unwrap(), delta).unwrap();
        let r2 = portfolio_log_return(&a, &b, &PortfolioSpec::new(vec![40], 5).unwrap(), delta).unwrap();
        let both = portfolio_log_return(&a, &b, &PortfolioSpec::new(vec![20, 40], 5).unwrap(), delta).unwrap();
        let expected = (0.5 * (r1.exp_m1() + r2.exp_m1())).ln_1p();
        assert!((both - expected).abs() < 1e-16);
    }

    #[test]
    fn zero_horizon_is_zero() {
        let a = YieldCurve::new((1..=40).map(|l| 0.01 + 0.0002 * l as f64).collect()).unwrap();
        let s = PortfolioSpec::new(vec![3, 17, 40], 0).unwrap();
        assert_eq!(portfolio_log_return(&a, &a, &s, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn coverage_and_validity_errors() {
        let c = YieldCurve::flat(0.01, 10);
        let s = PortfolioSpec::new(vec![20], 5).unwrap();
        assert!(matches!(
            portfolio_log_return(&c, &c, &s, 0.01),
            Err(BacktestError::LagCoverage { lag: 20, len: 10 })
        ));
        assert!(PortfolioSpec::new(vec![5], 5).is_err());
    }
}
