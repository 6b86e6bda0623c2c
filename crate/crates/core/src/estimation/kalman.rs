//! Linear Gaussian state-space filter for noisy yield observations.
//!
//! Transition `X(k) = a + αX(k−1) + Σ½ε(k)`, measurement
//! `Ŷ(k) = d + D X(k) + S½η(k)`.

use serde::{Deserialize, Serialize};

use super::EstimationError;
use crate::numerics::{self, cholesky_log_det, solve_lower_triangular, spd_sqrt, Matrix};
use crate::vasicek::{AffineTable, VasicekParams};

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceSpec {
    pub a: Vec<f64>,
    pub alpha: Matrix,
    pub sigma_sqrt: Matrix,
    pub d: Vec<f64>,
    pub big_d: Matrix,
    pub s: Matrix,
    pub tau: Vec<usize>,
}

impl StateSpaceSpec {
    pub fn new(
        a: Vec<f64>,
        alpha: Matrix,
        sigma_sqrt: Matrix,
        d: Vec<f64>,
        big_d: Matrix,
        s: Matrix,
        tau: Vec<usize>,
    ) -> Result<Self, EstimationError> {
        let n = a.len();
        let m = d.len();
        let dims = [
            ("alpha", alpha.rows(), n),
            ("alpha", alpha.cols(), n),
            ("sigma_sqrt", sigma_sqrt.rows(), n),
            ("sigma_sqrt", sigma_sqrt.cols(), n),
            ("measurement loading", big_d.rows(), m),
            ("measurement loading", big_d.cols(), n),
            ("measurement noise", s.rows(), m),
            ("measurement noise", s.cols(), m),
            ("maturity grid", tau.len(), m),
        ];
        for (what, found, expected) in dims {
            if found != expected {
                return Err(EstimationError::Dimension { what, expected, found });
            }
        }
        numerics::check_finite(&a, "transition drift")?;
        numerics::check_finite(&d, "measurement intercept")?;
        for i in 0..m {
            for j in 0..i {
                if (s[(i, j)] - s[(j, i)]).abs() > 1e-12 * s.max_abs() {
                    return Err(numerics::NumericsError::NotSymmetric { row: i, col: j }.into());
                }
            }
        }
        if !numerics::stationary_check(&alpha)? {
            return Err(crate::error::ModelError::NonStationary { what: "alpha" }.into());
        }
        Ok(Self {
            a,
            alpha,
            sigma_sqrt,
            d,
            big_d,
            s,
            tau,
        })
    }

    /// Measurement system from the pricing coefficients of `params`:
    /// `d_i = −A(τ_i)/(τ_iΔ)`, `D_ij = B_j(τ_i)/(τ_iΔ)`.
    pub fn from_model(
        params: &VasicekParams,
        a: Vec<f64>,
        alpha: Matrix,
        tau: Vec<usize>,
        s: Matrix,
    ) -> Result<Self, EstimationError> {
        let (d, big_d) = measurement_system(params, &tau)?;
        Self::new(a, alpha, params.sigma_sqrt().clone(), d, big_d, s, tau)
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn m(&self) -> usize {
        self.d.len()
    }
}

pub(crate) fn check_tau(tau: &[usize]) -> Result<usize, EstimationError> {
    if tau.is_empty() {
        return Err(EstimationError::InvalidConfig("empty maturity grid".into()));
    }
    if tau[0] == 0 || tau.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EstimationError::InvalidConfig(
            "maturities must be positive and strictly increasing".into(),
        ));
    }
    Ok(*tau.last().unwrap())
}

pub(crate) fn measurement_system(params: &VasicekParams, tau: &[usize]) -> Result<(Vec<f64>, Matrix), EstimationError> {
    let max = check_tau(tau)?;
    let table = AffineTable::new(params, max)?;
    let n = params.n();
    let delta = params.delta();
    let mut d = Vec::with_capacity(tau.len());
    let mut big_d = Matrix::zeros(tau.len(), n);
    for (i, &t) in tau.iter().enumerate() {
        let scale = t as f64 * delta;
        d.push(-table.a(t) / scale);
        for j in 0..n {
            big_d[(i, j)] = table.b(t)[j] / scale;
        }
    }
    Ok((d, big_d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KalmanOptions {
    /// Freeze gain and innovation covariance once the predicted covariance
    /// changes by less than this (relative, sup-norm) between steps.
    pub steady_state_tol: Option<f64>,
}

impl Default for KalmanOptions {
    fn default() -> Self {
        Self { steady_state_tol: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub x_pred: Vec<f64>,
    pub p_pred: Matrix,
    pub x_upd: Vec<f64>,
    pub p_upd: Matrix,
    pub zeta: Vec<f64>,
    pub f: Matrix,
    pub gain: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanOutput {
    pub states: Vec<FilterState>,
    pub loglik: f64,
}

/// Likelihood and the filtered factor at the first and last step.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanSummary {
    pub loglik: f64,
    pub first_filtered: Vec<f64>,
    pub last_filtered: Vec<f64>,
}

struct Step {
    l: Matrix,
    log_det: f64,
    gain: Matrix,
    f: Matrix,
    p_upd: Matrix,
    p_next: Matrix,
}

fn covariance_step(spec: &StateSpaceSpec, sigma: &Matrix, p_pred: &Matrix, k: usize) -> Result<Step, EstimationError> {
    let d = &spec.big_d;
    let dp = d * p_pred;
    let mut f = &(&dp * &d.transpose()) + &spec.s;
    f.symmetrize();
    let l = spd_sqrt(&f).map_err(|_| EstimationError::SingularInnovation { k })?;
    // gain' = F⁻¹ D P
    let m = spec.m();
    let n = spec.n();
    let mut gain = Matrix::zeros(n, m);
    for j in 0..n {
        let col: Vec<f64> = (0..m).map(|i| dp[(i, j)]).collect();
        let sol = numerics::cholesky_solve(&l, &col)?;
        for i in 0..m {
            gain[(j, i)] = sol[i];
        }
    }
    let kd = &gain * d;
    let mut p_upd = p_pred - &(&kd * p_pred);
    p_upd.symmetrize();
    let mut p_next = &(&(&spec.alpha * &p_upd) * &spec.alpha.transpose()) + sigma;
    p_next.symmetrize();
    Ok(Step {
        log_det: cholesky_log_det(&l),
        l,
        gain,
        f,
        p_upd,
        p_next,
    })
}

fn check_obs(spec: &StateSpaceSpec, obs: &[Vec<f64>], x_init: &[f64]) -> Result<(), EstimationError> {
    if obs.is_empty() {
        return Err(EstimationError::InsufficientData { needed: 1, found: 0 });
    }
    if x_init.len() != spec.n() {
        return Err(EstimationError::Dimension {
            what: "initial factor",
            expected: spec.n(),
            found: x_init.len(),
        });
    }
    if let Some(row) = obs.iter().find(|r| r.len() != spec.m()) {
        return Err(EstimationError::Dimension {
            what: "observation row",
            expected: spec.m(),
            found: row.len(),
        });
    }
    Ok(())
}

fn run<F: FnMut(&Step, &[f64], &[f64], &[f64], &Matrix)>(
    spec: &StateSpaceSpec,
    obs: &[Vec<f64>],
    x_init: &[f64],
    opts: &KalmanOptions,
    mut record: F,
) -> Result<KalmanSummary, EstimationError> {
    check_obs(spec, obs, x_init)?;
    let sigma = spec.sigma_sqrt.outer_self();
    let m = spec.m();
    let log_2pi = (2.0 * std::f64::consts::PI).ln();
    let mut x_pred = numerics::add(&spec.a, &spec.alpha.mul_vec(x_init));
    let mut p_pred = sigma.clone();
    let mut step = covariance_step(spec, &sigma, &p_pred, 0)?;
    let mut steady = false;
    let mut loglik = 0.0;
    let mut first = Vec::new();
    let mut zeta = vec![0.0; m];
    for (k, y) in obs.iter().enumerate() {
        if k > 0 && !steady {
            step = covariance_step(spec, &sigma, &p_pred, k)?;
        }
        let fitted = spec.big_d.mul_vec(&x_pred);
        for i in 0..m {
            zeta[i] = y[i] - spec.d[i] - fitted[i];
        }
        let w = solve_lower_triangular(&step.l, &zeta)?;
        let quad = numerics::dot(&w, &w);
        loglik -= 0.5 * (m as f64 * log_2pi + step.log_det + quad);
        let x_upd = numerics::add(&x_pred, &step.gain.mul_vec(&zeta));
        record(&step, &x_pred, &x_upd, &zeta, &p_pred);
        if k == 0 {
            first = x_upd.clone();
        }
        x_pred = numerics::add(&spec.a, &spec.alpha.mul_vec(&x_upd));
        if !steady {
            if let Some(tol) = opts.steady_state_tol {
                if step.p_next.max_abs_diff(&p_pred) <= tol * p_pred.max_abs() {
                    steady = true;
                }
            }
            p_pred = step.p_next.clone();
        }
        if k + 1 == obs.len() {
            return Ok(KalmanSummary {
                loglik,
                first_filtered: first,
                last_filtered: x_upd,
            });
        }
    }
    unreachable!("observations are non-empty")
}

/// Filters `obs` (one row per date `t−K+1..t`) starting from `X(t−K) = x_init`.
pub fn kalman_filter(
    spec: &StateSpaceSpec,
    obs: &[Vec<f64>],
    x_init: &[f64],
    opts: &KalmanOptions,
) -> Result<KalmanOutput, EstimationError> {
    let mut states = Vec::with_capacity(obs.len());
    let summary = run(spec, obs, x_init, opts, |step, x_pred, x_upd, zeta, p_pred| {
        states.push(FilterState {
            x_pred: x_pred.to_vec(),
            p_pred: p_pred.clone(),
            x_upd: x_upd.to_vec(),
            p_upd: step.p_upd.clone(),
            zeta: zeta.to_vec(),
            f: step.f.clone(),
            gain: step.gain.clone(),
        })
    })?;
    Ok(KalmanOutput {
        states,
        loglik: summary.loglik,
    })
}

/// As [`kalman_filter`] without recording the path.
pub fn kalman_loglik(
    spec: &StateSpaceSpec,
    obs: &[Vec<f64>],
    x_init: &[f64],
    opts: &KalmanOptions,
) -> Result<KalmanSummary, EstimationError> {
    run(spec, obs, x_init, opts, |_, _, _, _, _| {})
}
