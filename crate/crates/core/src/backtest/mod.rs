//! Simulation studies and the back-test of simulated return bands against
//! realized portfolio returns.

mod pipeline;
mod portfolio;
mod simulate;
mod stats;

pub use pipeline::{
    run_backtest, state_from_estimate, stochvol_from_history, BacktestConfig, BacktestReport, ModelBand, PeriodResult,
};
pub use portfolio::{portfolio_log_return, PortfolioSpec, DEFAULT_MATURITIES};
pub use simulate::{
    simulate_crc_paths, simulate_fan, simulate_portfolio_returns, simulate_return_distribution, Measure,
    ParameterProcess, YieldFan,
};
pub use stats::{
    binomial_tail, bootstrap_ci, coverage_test, excess_kurtosis, jarque_bera, quantile_sorted, summarize,
    CoverageReport, JarqueBera, ReturnSample, SummaryStats,
};

use thiserror::Error;

use crate::data::DataError;
use crate::error::ModelError;
use crate::estimation::EstimationError;
use crate::stochvol::StochVolError;

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    StochVol(#[from] StochVolError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("curve of length {len} does not reach lag {lag}")]
    LagCoverage { lag: usize, len: usize },
    #[error("{0}")]
    Invalid(String),
}
