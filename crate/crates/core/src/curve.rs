use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Annualized continuously-compounded yields for times to maturity of
/// `1..=len()` steps on the model grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct YieldCurve {
    yields: Vec<f64>,
}

impl YieldCurve {
    pub fn new(yields: Vec<f64>) -> Result<Self, ModelError> {
        if yields.is_empty() {
            return Err(ModelError::EmptyCurve);
        }
        if let Some(i) = yields.iter().position(|y| !y.is_finite()) {
            return Err(ModelError::NonFinite {
                what: format!("yield at lag {}", i + 1),
            });
        }
        Ok(Self { yields })
    }

    pub fn flat(level: f64, len: usize) -> Self {
        Self {
            yields: vec![level; len],
        }
    }

    pub fn len(&self) -> usize {
        self.yields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.yields.is_empty()
    }

    /// Yield for a time to maturity of `lag` steps (`1 ≤ lag ≤ len`).
    pub fn at(&self, lag: usize) -> f64 {
        assert!(lag >= 1 && lag <= self.yields.len(), "lag {lag} outside curve");
        self.yields[lag - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.yields
    }

    pub fn into_values(self) -> Vec<f64> {
        self.yields
    }

    pub fn spot(&self) -> f64 {
        self.yields[0]
    }

    pub fn zcb_price(&self, lag: usize, delta: f64) -> f64 {
        (-self.at(lag) * lag as f64 * delta).exp()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        crate::numerics::max_abs_diff(&self.yields, &other.yields)
    }
}

impl TryFrom<Vec<f64>> for YieldCurve {
    type Error = ModelError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<YieldCurve> for Vec<f64> {
    fn from(c: YieldCurve) -> Self {
        c.yields
    }
}
