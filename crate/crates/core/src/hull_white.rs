//! Hull–White extended Vasiček model anchored at step `k`.
//!
//! The extension adds `θ(t − k)e₁` to the drift at each step `t > k`. The
//! `B` coefficients are those of the homogeneous model; only `A` changes:
//!
//! `A⁽ᵏ⁾(t,m) = A(m−t) − Σ_{s=t+1}^{m−1} B₁(m−s) θ(s−k)`.

use serde::{Deserialize, Serialize};

use crate::curve::YieldCurve;
use crate::error::ModelError;
use crate::numerics::{self, Matrix};
use crate::vasicek::{AffineTable, FactorState, VasicekParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullWhiteExtension {
    k: usize,
    theta: Vec<f64>,
}

impl HullWhiteExtension {
    pub fn new(k: usize, theta: Vec<f64>) -> Result<Self, ModelError> {
        if theta.is_empty() {
            return Err(ModelError::ThetaOutOfRange { index: 1, len: 0 });
        }
        numerics::check_finite(&theta, "Hull-White extension")?;
        Ok(Self { k, theta })
    }

    /// `θ ≡ 0` of the given length.
    pub fn zero(k: usize, len: usize) -> Self {
        Self {
            k,
            theta: vec![0.0; len.max(1)],
        }
    }

    pub fn anchor(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.theta
    }

    /// `θ(i)` for `1 ≤ i ≤ len`.
    pub fn get(&self, i: usize) -> Result<f64, ModelError> {
        if i == 0 || i > self.theta.len() {
            return Err(ModelError::ThetaOutOfRange {
                index: i,
                len: self.theta.len(),
            });
        }
        Ok(self.theta[i - 1])
    }
}

/// Lower-triangular system `C θ = z` whose solution reproduces a target curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSystem {
    pub c: Matrix,
    pub z: Vec<f64>,
}

impl CalibrationSystem {
    /// `‖Cθ − z‖∞`.
    pub fn residual(&self, theta: &[f64]) -> f64 {
        numerics::max_abs_diff(&self.c.mul_vec(theta), &self.z)
    }
}

pub fn extended_a(
    params: &VasicekParams,
    hwx: &HullWhiteExtension,
    t: usize,
    m: usize,
) -> Result<f64, ModelError> {
    if t < hwx.k {
        return Err(ModelError::BeforeAnchor { t, k: hwx.k });
    }
    if m <= t {
        return Err(ModelError::InvalidLag(m.saturating_sub(t)));
    }
    let lag = m - t;
    let table = AffineTable::new(params, lag)?;
    let offset = t - hwx.k;
    check_theta_range(hwx, offset + lag - 1)?;
    Ok(extended_a_from_table(&table, &hwx.theta[offset..], lag))
}

/// `A(ℓ) − Σ_{j=1}^{ℓ−1} B₁(ℓ−j) θ_j` where `theta[j−1] = θ_j` is already
/// shifted to the evaluation date.
fn extended_a_from_table(table: &AffineTable, theta: &[f64], lag: usize) -> f64 {
    let mut acc = 0.0;
    for j in 1..lag {
        acc += table.b1(lag - j) * theta[j - 1];
    }
    table.a(lag) - acc
}

fn check_theta_range(hwx: &HullWhiteExtension, needed: usize) -> Result<(), ModelError> {
    if needed > hwx.theta.len() {
        return Err(ModelError::ThetaOutOfRange {
            index: needed,
            len: hwx.theta.len(),
        });
    }
    Ok(())
}

fn check_inputs(params: &VasicekParams, x: &[f64], y: &YieldCurve) -> Result<usize, ModelError> {
    if x.len() != params.n() {
        return Err(ModelError::Dimension {
            what: "factor state",
            expected: params.n(),
            found: x.len(),
        });
    }
    numerics::check_finite(x, "factor state")?;
    if y.len() < 2 {
        return Err(ModelError::CurveTooShort(y.len()));
    }
    Ok(y.len())
}

/// `z_i = A(i+1) − B(i+1)'x + (i+1) y_{i+1} Δ` for `i = 1..M−1`.
fn rhs(table: &AffineTable, delta: f64, x: &[f64], y: &YieldCurve) -> Vec<f64> {
    (1..y.len())
        .map(|i| {
            let lag = i + 1;
            table.a(lag) - numerics::dot(table.b(lag), x) + lag as f64 * y.at(lag) * delta
        })
        .collect()
}

/// Dense form of the calibration system; `calibrate_theta` solves the same
/// equations without materializing `C`.
pub fn build_calibration_system(
    params: &VasicekParams,
    x: &[f64],
    y: &YieldCurve,
) -> Result<CalibrationSystem, ModelError> {
    let m = check_inputs(params, x, y)?;
    let table = AffineTable::new(params, m)?;
    let dim = m - 1;
    let mut c = Matrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..=i {
            c[(i, j)] = table.b1(i + 1 - j);
        }
    }
    Ok(CalibrationSystem {
        c,
        z: rhs(&table, params.delta(), x, y),
    })
}

/// `θ` of length `M − 1` reproducing lags `2..=M` of `y` at time `k`. The lag-1
/// yield of the extended model is `1'x` regardless of `θ`.
pub fn calibrate_theta(
    params: &VasicekParams,
    k: usize,
    x: &[f64],
    y: &YieldCurve,
) -> Result<HullWhiteExtension, ModelError> {
    let m = check_inputs(params, x, y)?;
    let table = AffineTable::new(params, m)?;
    let z = rhs(&table, params.delta(), x, y);
    let b1: Vec<f64> = (1..m).map(|lag| table.b1(lag)).collect();
    let mut theta = vec![0.0; m - 1];
    // C is Toeplitz: C_ij = B₁(i+1−j), with B₁(1) = Δ on the diagonal.
    for i in 0..m - 1 {
        let mut acc = 0.0;
        for j in 0..i {
            acc += b1[i - j] * theta[j];
        }
        theta[i] = (z[i] - acc) / b1[0];
    }
    HullWhiteExtension::new(k, theta)
}

/// Cheap `θ(1)` from the lag-2 yield:
/// `½Δ 1'Σ1 − 1'b − 1'(1 + β)x + 2y₂`.
pub fn theta_first_component(params: &VasicekParams, x: &[f64], y2: f64) -> f64 {
    let n = params.n();
    let ones = numerics::ones(n);
    let beta_x = params.beta().mul_vec(x);
    let sum_x: f64 = x.iter().sum();
    let sum_beta_x: f64 = beta_x.iter().sum();
    0.5 * params.delta() * params.sigma_quad(&ones) - params.b().iter().sum::<f64>() - sum_x - sum_beta_x
        + 2.0 * y2
}

/// Yields at time `state.t ≥ k` for lags `1..=max_lag`.
pub fn extended_yield_curve(
    params: &VasicekParams,
    hwx: &HullWhiteExtension,
    state: &FactorState,
    max_lag: usize,
) -> Result<YieldCurve, ModelError> {
    if state.x.len() != params.n() {
        return Err(ModelError::Dimension {
            what: "factor state",
            expected: params.n(),
            found: state.x.len(),
        });
    }
    if state.t < hwx.k {
        return Err(ModelError::BeforeAnchor { t: state.t, k: hwx.k });
    }
    if max_lag == 0 {
        return Err(ModelError::InvalidLag(0));
    }
    let table = AffineTable::new(params, max_lag)?;
    extended_curve_from_table(&table, params.delta(), hwx, state.t - hwx.k, &state.x, max_lag)
}

pub(crate) fn extended_curve_from_table(
    table: &AffineTable,
    delta: f64,
    hwx: &HullWhiteExtension,
    offset: usize,
    x: &[f64],
    max_lag: usize,
) -> Result<YieldCurve, ModelError> {
    check_theta_range(hwx, offset + max_lag - 1)?;
    let theta = &hwx.theta[offset..];
    let mut y = Vec::with_capacity(max_lag);
    y.push(x.iter().sum());
    for lag in 2..=max_lag {
        let a = extended_a_from_table(table, theta, lag);
        y.push((-a + numerics::dot(table.b(lag), x)) / (lag as f64 * delta));
    }
    YieldCurve::new(y)
}
