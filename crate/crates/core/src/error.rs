use thiserror::Error;

use crate::numerics::NumericsError;

/// Errors raised by the pricing model, the Hull–White calibration, the
/// re-calibration engine and the parameter processes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {what}")]
    NonFinite { what: String },
    #[error("{what} has spectrum outside (-1, 1)")]
    NonStationary { what: &'static str },
    #[error("volatility root must be lower triangular")]
    NotLowerTriangular,
    #[error("volatility root is singular (diagonal entry {index} is {value:e})")]
    SingularVolatility { index: usize, value: f64 },
    #[error("grid size must be positive, got {0}")]
    InvalidDelta(f64),
    #[error("lag must be at least 1, got {0}")]
    InvalidLag(usize),
    #[error("horizon must be at least 1")]
    InvalidHorizon,
    #[error("yield curve is empty")]
    EmptyCurve,
    #[error("calibration needs a curve with at least 2 maturities, got {0}")]
    CurveTooShort(usize),
    #[error("Hull-White extension index {index} outside 1..={len}")]
    ThetaOutOfRange { index: usize, len: usize },
    #[error("time t={t} precedes the anchor k={k}")]
    BeforeAnchor { t: usize, k: usize },
    #[error("spot-rate mismatch: curve lag-1 yield {curve} but 1'x = {factor}")]
    SpotMismatch { curve: f64, factor: f64 },
    #[error("assembled covariance is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("path lengths disagree: {0}")]
    PathLength(String),
    #[error("regression for component {component} is rank deficient")]
    RankDeficient { component: usize },
    #[error("series too short: need {needed}, found {found}")]
    SeriesTooShort { needed: usize, found: usize },
}
