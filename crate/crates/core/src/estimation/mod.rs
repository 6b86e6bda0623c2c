//! Per-window parameter inference: Kalman filter likelihood, realized
//! covariations with cross-sectional least squares, time-grid rescaling,
//! drift MLE and market-price-of-risk extraction.

mod kalman;
mod market_price;
mod mle;
mod rcov;
mod rescale;
mod result;
mod rolling;

pub use kalman::{kalman_filter, kalman_loglik, FilterState, KalmanOptions, KalmanOutput, KalmanSummary, StateSpaceSpec};
pub use market_price::{infer_market_price, real_world_transition};
pub use mle::{cross_section_factor, fit_drift_mle, DriftFit, DriftStart, MleOptions};
pub use rcov::{
    fit_beta_sigma_rcov, model_rcov, realized_cov, realized_cov_matrix, RcovFit, RcovOptions, Weights,
};
pub use rescale::{compose_grid, rescale_grid, GridRescaling};
pub use result::{write_results_csv, EstimationResult};
pub use rolling::{rolling_estimate, EstimationConfig, RollingOutput, WindowFailure};

use thiserror::Error;

use crate::error::ModelError;
use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("prediction covariance F({k}) is numerically singular")]
    SingularInnovation { k: usize },
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("need at least {needed} observations, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("gamma entry {index} is {value}; rescaling needs values in (0, 1)")]
    InvalidGamma { index: usize, value: f64 },
    #[error("invalid setting: {0}")]
    InvalidConfig(String),
}

/// Largest usable argument of the `tanh` reparameterization; `tanh(10)`
/// is within 5e-9 of 1. Objectives are infinite beyond it so the simplex
/// cannot drift along the flat tail.
pub(crate) const TANH_LIMIT: f64 = 10.0;

pub(crate) fn bounded_tanh(u: f64) -> f64 {
    u.clamp(-TANH_LIMIT, TANH_LIMIT).tanh()
}

pub(crate) fn within_tanh_limit(u: &[f64]) -> bool {
    u.iter().all(|v| v.abs() <= TANH_LIMIT)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_tanh_stays_inside_the_unit_interval() {
        for u in [1e3, -1e3, f64::MAX, 25.0] {
            let v = bounded_tanh(u);
            assert!(v.abs() < 1.0 && v.abs() > 0.999_999_99, "{u} -> {v}");
        }
        assert!(within_tanh_limit(&[10.0, -3.0]));
        assert!(!within_tanh_limit(&[10.5]));
    }
}
