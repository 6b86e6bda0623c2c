//! JSON run configuration shared by the command-line tools.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DataError, MissingPolicy, Units};
use crate::backtest::{BacktestConfig, Measure};
use crate::estimation::EstimationConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub measure: Measure,
    pub horizon: usize,
    pub paths: usize,
    /// Ignore the correlation between factor and volatility shocks.
    pub zero_cross: bool,
    /// Lags reported in the quantile fan; empty means every lag.
    pub fan_lags: Vec<usize>,
    pub fan_levels: Vec<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            measure: Measure::P,
            horizon: 21,
            paths: 10_000,
            zero_cross: false,
            fan_lags: vec![1, 21, 63, 126, 252, 504, 1260, 2520],
            fan_levels: vec![0.025, 0.25, 0.5, 0.75, 0.975],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub units: Option<Units>,
    pub missing: MissingPolicy,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    pub estimation: EstimationConfig,
    pub simulation: SimulationConfig,
    pub backtest: BacktestConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, DataError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, DataError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// SHA-256 of the compact JSON form of the fully defaulted configuration.
pub fn config_hash(cfg: &RunConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

pub fn provenance_header(cfg: &RunConfig, seed: u64) -> String {
    format!("# config_hash={}, seed={seed}", config_hash(cfg))
}
