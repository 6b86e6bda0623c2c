//! Dense linear algebra, Nelder–Mead, natural cubic splines and RNG streams.

mod linalg;
mod matrix;
mod optimize;
mod rng;
mod spline;

pub use linalg::{
    cholesky_log_det, cholesky_solve, clip_spectrum, least_squares, min_symmetric_eigenvalue, psd_sqrt,
    solve_lower_transpose, solve_lower_triangular, solve_lower_triangular_matrix, spd_sqrt,
    spectral_radius, stationary_check,
};
pub use matrix::{
    add, check_finite, dot, max_abs_diff, norm_inf, ones, scaled, sub, unit_e1, Matrix,
};
pub use optimize::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use rng::RngStream;
pub use spline::{natural_cubic_spline, NaturalCubicSpline};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("non-finite value in {what}")]
    NonFinite { what: String },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("zero diagonal entry at index {index}")]
    ZeroPivot { index: usize },
    #[error("least-squares design is rank deficient at column {column}")]
    RankDeficient { column: usize },
    #[error("objective returned NaN at {point:?}")]
    ObjectiveNan { point: Vec<f64> },
    #[error("spline needs at least 2 knots, found {found}")]
    TooFewKnots { found: usize },
    #[error("knots must be strictly increasing (violated at index {index})")]
    KnotsNotIncreasing { index: usize },
}
