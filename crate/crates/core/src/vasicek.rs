//! Time-homogeneous discrete-time multifactor Vasiček model.
//!
//! Factors follow `X(t+1) = b + βX(t) + Σ½ε*(t+1)` under the pricing measure
//! and the spot rate is `r(t) = 1'X(t)`. Zero-coupon prices are affine,
//! `P(t,m) = exp(A(ℓ) − B(ℓ)'X(t))` with lag `ℓ = m − t`.

use serde::{Deserialize, Serialize};

use crate::curve::YieldCurve;
use crate::error::ModelError;
use crate::numerics::{self, Matrix, RngStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct VasicekParams {
    b: Vec<f64>,
    beta: Matrix,
    sigma_sqrt: Matrix,
    delta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    b: Vec<f64>,
    beta: Matrix,
    sigma_sqrt: Matrix,
    delta: f64,
}

impl TryFrom<RawParams> for VasicekParams {
    type Error = ModelError;
    fn try_from(r: RawParams) -> Result<Self, ModelError> {
        Self::new(r.b, r.beta, r.sigma_sqrt, r.delta)
    }
}

impl From<VasicekParams> for RawParams {
    fn from(p: VasicekParams) -> Self {
        RawParams {
            b: p.b,
            beta: p.beta,
            sigma_sqrt: p.sigma_sqrt,
            delta: p.delta,
        }
    }
}

impl VasicekParams {
    /// Validated parameters: `β` stationary, `Σ½` lower triangular with a
    /// strictly positive diagonal, `Δ > 0`.
    pub fn new(b: Vec<f64>, beta: Matrix, sigma_sqrt: Matrix, delta: f64) -> Result<Self, ModelError> {
        Self::build(b, beta, sigma_sqrt, delta, false)
    }

    /// As [`VasicekParams::new`] but accepts zero diagonal entries in `Σ½`
    /// (degenerate, partly deterministic factors).
    pub fn new_allow_singular(
        b: Vec<f64>,
        beta: Matrix,
        sigma_sqrt: Matrix,
        delta: f64,
    ) -> Result<Self, ModelError> {
        Self::build(b, beta, sigma_sqrt, delta, true)
    }

    fn build(
        b: Vec<f64>,
        beta: Matrix,
        sigma_sqrt: Matrix,
        delta: f64,
        allow_singular: bool,
    ) -> Result<Self, ModelError> {
        let n = b.len();
        if n == 0 {
            return Err(ModelError::Dimension {
                what: "drift b",
                expected: 1,
                found: 0,
            });
        }
        for (what, m) in [("beta", &beta), ("sigma_sqrt", &sigma_sqrt)] {
            if m.rows() != n || m.cols() != n {
                return Err(ModelError::Dimension {
                    what,
                    expected: n,
                    found: if m.rows() != n { m.rows() } else { m.cols() },
                });
            }
        }
        numerics::check_finite(&b, "drift b")?;
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(ModelError::InvalidDelta(delta));
        }
        if !sigma_sqrt.is_lower_triangular() {
            return Err(ModelError::NotLowerTriangular);
        }
        for i in 0..n {
            let d = sigma_sqrt[(i, i)];
            if d < 0.0 || (!allow_singular && d == 0.0) {
                return Err(ModelError::SingularVolatility { index: i, value: d });
            }
        }
        if !numerics::stationary_check(&beta)? {
            return Err(ModelError::NonStationary { what: "beta" });
        }
        Ok(Self {
            b,
            beta,
            sigma_sqrt,
            delta,
        })
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn beta(&self) -> &Matrix {
        &self.beta
    }

    pub fn sigma_sqrt(&self) -> &Matrix {
        &self.sigma_sqrt
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `Σ = Σ½ (Σ½)'`.
    pub fn sigma(&self) -> Matrix {
        self.sigma_sqrt.outer_self()
    }

    pub fn with_b(&self, b: Vec<f64>) -> Result<Self, ModelError> {
        Self::build(b, self.beta.clone(), self.sigma_sqrt.clone(), self.delta, true)
    }

    /// Stationary mean `(1 − β)⁻¹ b`.
    pub fn long_run_mean(&self) -> Vec<f64> {
        let n = self.n();
        let mut a = Matrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] -= self.beta[(i, j)];
            }
        }
        gauss_solve(a, self.b.clone())
    }

    /// `b'Σb` type quadratic `‖(Σ½)'v‖²`, nonnegative by construction.
    pub(crate) fn sigma_quad(&self, v: &[f64]) -> f64 {
        let w = self.sigma_sqrt.tr_mul_vec(v);
        numerics::dot(&w, &w)
    }
}

/// Small dense solve with partial pivoting; only used for `(1 − β)⁻¹ b`.
fn gauss_solve(mut a: Matrix, mut y: Vec<f64>) -> Vec<f64> {
    let n = y.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[(i, c)].abs().total_cmp(&a[(j, c)].abs()))
            .unwrap_or(c);
        if p != c {
            for k in 0..n {
                let t = a[(c, k)];
                a[(c, k)] = a[(p, k)];
                a[(p, k)] = t;
            }
            y.swap(c, p);
        }
        for r in c + 1..n {
            let f = a[(r, c)] / a[(c, c)];
            for k in c..n {
                a[(r, k)] -= f * a[(c, k)];
            }
            y[r] -= f * y[c];
        }
    }
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[(r, k)] * y[k]).sum();
        y[r] = (y[r] - s) / a[(r, r)];
    }
    y
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorState {
    pub x: Vec<f64>,
    pub t: usize,
}

impl FactorState {
    pub fn new(x: Vec<f64>, t: usize) -> Result<Self, ModelError> {
        numerics::check_finite(&x, "factor state")?;
        Ok(Self { x, t })
    }

    pub fn spot_rate(&self) -> f64 {
        self.x.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineCoeffs {
    pub a: f64,
    pub b: Vec<f64>,
}

/// `A(ℓ)` and `B(ℓ)` for every lag `1..=max_lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineTable {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl AffineTable {
    pub fn new(params: &VasicekParams, max_lag: usize) -> Result<Self, ModelError> {
        if max_lag == 0 {
            return Err(ModelError::InvalidLag(0));
        }
        let n = params.n();
        let delta = params.delta();
        let mut a = Vec::with_capacity(max_lag);
        let mut b = Vec::with_capacity(max_lag * n);
        let mut prev_b = vec![0.0; n];
        let mut prev_a = 0.0;
        for lag in 1..=max_lag {
            // A(ℓ) = A(ℓ−1) − B(ℓ−1)'b + ½ B(ℓ−1)'ΣB(ℓ−1), using B(0) = 0
            let cur_a = if lag == 1 {
                0.0
            } else {
                prev_a - numerics::dot(&prev_b, params.b()) + 0.5 * params.sigma_quad(&prev_b)
            };
            // B(ℓ) = β'B(ℓ−1) + 1Δ
            let mut cur_b = params.beta().tr_mul_vec(&prev_b);
            for v in &mut cur_b {
                *v += delta;
            }
            a.push(cur_a);
            b.extend_from_slice(&cur_b);
            prev_a = cur_a;
            prev_b = cur_b;
        }
        Ok(Self { n, a, b })
    }

    pub fn max_lag(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self, lag: usize) -> f64 {
        self.a[lag - 1]
    }

    pub fn b(&self, lag: usize) -> &[f64] {
        &self.b[(lag - 1) * self.n..lag * self.n]
    }

    /// First component `B₁(ℓ)`.
    pub fn b1(&self, lag: usize) -> f64 {
        self.b[(lag - 1) * self.n]
    }

    pub fn coeffs(&self, lag: usize) -> AffineCoeffs {
        AffineCoeffs {
            a: self.a(lag),
            b: self.b(lag).to_vec(),
        }
    }
}

pub fn compute_b(params: &VasicekParams, lag: usize) -> Result<Vec<f64>, ModelError> {
    Ok(AffineTable::new(params, lag)?.b(lag).to_vec())
}

pub fn compute_a(params: &VasicekParams, lag: usize) -> Result<f64, ModelError> {
    Ok(AffineTable::new(params, lag)?.a(lag))
}

pub fn affine_coeffs(params: &VasicekParams, lag: usize) -> Result<AffineCoeffs, ModelError> {
    Ok(AffineTable::new(params, lag)?.coeffs(lag))
}

pub fn zcb_price(params: &VasicekParams, x: &[f64], lag: usize) -> Result<f64, ModelError> {
    check_dim(params, x)?;
    let c = affine_coeffs(params, lag)?;
    Ok((c.a - numerics::dot(&c.b, x)).exp())
}

/// Yields for lags `1..=max_lag`; the lag-1 entry is `1'x` exactly.
pub fn yield_curve(params: &VasicekParams, state: &FactorState, max_lag: usize) -> Result<YieldCurve, ModelError> {
    check_dim(params, &state.x)?;
    let table = AffineTable::new(params, max_lag)?;
    Ok(curve_from_table(&table, params.delta(), &state.x))
}

pub(crate) fn curve_from_table(table: &AffineTable, delta: f64, x: &[f64]) -> YieldCurve {
    let mut y = Vec::with_capacity(table.max_lag());
    y.push(x.iter().sum());
    for lag in 2..=table.max_lag() {
        y.push((-table.a(lag) + numerics::dot(table.b(lag), x)) / (lag as f64 * delta));
    }
    YieldCurve::new(y).expect("finite inputs give finite yields")
}

/// Gaussian law of `X(t+h)` given `X(t) = x`.
pub fn conditional_moments(
    params: &VasicekParams,
    state: &FactorState,
    horizon: usize,
) -> Result<(Vec<f64>, Matrix), ModelError> {
    check_dim(params, &state.x)?;
    if horizon == 0 {
        return Err(ModelError::InvalidHorizon);
    }
    let sigma = params.sigma();
    let beta = params.beta();
    let beta_t = beta.transpose();
    let mut mean = state.x.clone();
    let mut cov = Matrix::zeros(params.n(), params.n());
    for _ in 0..horizon {
        mean = numerics::add(params.b(), &beta.mul_vec(&mean));
        cov = &(&(beta * &cov) * &beta_t) + &sigma;
    }
    cov.symmetrize();
    Ok((mean, cov))
}

/// One transition `b + βx + Σ½ε`.
pub fn factor_step(params: &VasicekParams, x: &[f64], eps: &[f64]) -> Vec<f64> {
    let mut out = params.beta().mul_vec(x);
    let shock = params.sigma_sqrt().mul_vec(eps);
    for ((o, b), s) in out.iter_mut().zip(params.b()).zip(&shock) {
        *o += b + s;
    }
    out
}

/// Path `X(t), X(t+1), …, X(t+horizon)` including the starting state.
pub fn simulate_factors(
    params: &VasicekParams,
    state: &FactorState,
    horizon: usize,
    rng: &mut RngStream,
) -> Result<Vec<FactorState>, ModelError> {
    check_dim(params, &state.x)?;
    if horizon == 0 {
        return Err(ModelError::InvalidHorizon);
    }
    let mut path = Vec::with_capacity(horizon + 1);
    path.push(state.clone());
    let mut eps = vec![0.0; params.n()];
    for h in 1..=horizon {
        rng.fill_standard_normal(&mut eps);
        let x = factor_step(params, &path[h - 1].x, &eps);
        path.push(FactorState { x, t: state.t + h });
    }
    Ok(path)
}

/// `Δ Σ r(s)` over all but the last state of a path: the log of the bank
/// account accrued from the first to the last date.
pub fn log_bank_account(delta: f64, path: &[FactorState]) -> f64 {
    path.iter()
        .take(path.len().saturating_sub(1))
        .map(|s| s.spot_rate())
        .sum::<f64>()
        * delta
}

fn check_dim(params: &VasicekParams, x: &[f64]) -> Result<(), ModelError> {
    if x.len() != params.n() {
        return Err(ModelError::Dimension {
            what: "factor state",
            expected: params.n(),
            found: x.len(),
        });
    }
    Ok(())
}
