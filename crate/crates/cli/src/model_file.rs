//! Model JSON shared by `estimate --params-out`, `calibrate` and `simulate`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vasicek_crc::crc::MarketPriceOfRisk;
use vasicek_crc::estimation::EstimationResult;
use vasicek_crc::numerics::Matrix;
use vasicek_crc::VasicekParams;

use crate::error::CliError;
use crate::output::Provenance;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    /// Step length; the panel's when absent.
    #[serde(default)]
    pub delta: Option<f64>,
    pub b: Vec<f64>,
    pub beta: Matrix,
    pub sigma_sqrt: Matrix,
    /// Factor value; `(y₁, 0, …, 0)` when absent.
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, rename = "Lambda")]
    pub big_lambda: Option<Matrix>,
}

impl ModelFile {
    pub fn from_estimate(r: &EstimationResult, delta: f64, provenance: Provenance) -> Self {
        Self {
            provenance: Some(provenance),
            delta: Some(delta),
            b: r.b.clone(),
            beta: r.beta.clone(),
            sigma_sqrt: r.sigma_sqrt.clone(),
            x: Some(r.x_filtered.clone()),
            lambda: Some(r.lambda.clone()),
            big_lambda: Some(r.big_lambda.clone()),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    pub fn params(&self, panel_delta: f64) -> Result<VasicekParams, CliError> {
        VasicekParams::new(self.b.clone(), self.beta.clone(), self.sigma_sqrt.clone(), self.delta.unwrap_or(panel_delta))
            .map_err(|e| CliError::Data(format!("model parameters: {e}")))
    }

    pub fn market_price(&self) -> Result<MarketPriceOfRisk, CliError> {
        let n = self.b.len();
        let lambda = self.lambda.clone().unwrap_or_else(|| vec![0.0; n]);
        let big = self.big_lambda.clone().unwrap_or_else(|| Matrix::zeros(n, n));
        MarketPriceOfRisk::new(lambda, big).map_err(|e| CliError::Data(format!("market price of risk: {e}")))
    }

    /// Factor value whose spot rate matches `spot`: the first component
    /// absorbs any difference.
    pub fn factor_for_spot(&self, spot: f64) -> Vec<f64> {
        let mut x = self.x.clone().unwrap_or_else(|| vec![0.0; self.b.len()]);
        let shift = spot - x.iter().sum::<f64>();
        if self.x.is_some() && shift.abs() > 1e-12 {
            eprintln!("note: shifting x_1 by {shift:e} so the spot rate matches the curve");
        }
        if let Some(first) = x.first_mut() {
            *first += shift;
        }
        x
    }
}
