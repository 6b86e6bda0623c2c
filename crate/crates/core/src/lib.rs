//! Discrete-time multifactor Vasiček term-structure model with Hull–White
//! extension, consistent re-calibration, estimation and back-testing.

pub mod backtest;
pub mod crc;
pub mod data;
pub mod estimation;
pub mod curve;
pub mod error;
pub mod hull_white;
pub mod numerics;
pub mod stochvol;
pub mod vasicek;

pub use curve::YieldCurve;
pub use error::ModelError;
pub use vasicek::{AffineCoeffs, AffineTable, FactorState, VasicekParams};
