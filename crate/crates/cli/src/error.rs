use std::fmt;

use vasicek_crc::backtest::BacktestError;
use vasicek_crc::data::DataError;
use vasicek_crc::estimation::EstimationError;
use vasicek_crc::stochvol::StochVolError;
use vasicek_crc::ModelError;

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flag combination (64).
    Usage(String),
    /// Unreadable or invalid input files (65).
    Data(String),
    /// Anything else (1).
    Failed(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Data(_) => 65,
            CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        match e {
            EstimationError::InsufficientData { .. } | EstimationError::Dimension { .. } => CliError::Data(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<BacktestError> for CliError {
    fn from(e: BacktestError) -> Self {
        match e {
            BacktestError::Data(d) => d.into(),
            BacktestError::Estimation(d) => d.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<StochVolError> for CliError {
    fn from(e: StochVolError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(format!("writing output: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Failed(format!("writing output: {e}"))
    }
}
