//! Likelihood maximization over the drifts `b`, `a` and diagonal `α` with
//! `β` and `Σ½` held fixed.

use serde::{Deserialize, Serialize};

use super::kalman::{check_tau, kalman_loglik, KalmanOptions, StateSpaceSpec};
use super::EstimationError;
use crate::numerics::{self, least_squares, nelder_mead, Matrix, NelderMeadOptions};
use crate::vasicek::{AffineTable, VasicekParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MleOptions {
    /// Restarts of the simplex at the previous optimum. Restarts also end
    /// once one improves the scaled objective by less than `optimizer.tol_f`.
    pub max_outer: usize,
    /// Sup-norm change in the (scaled) parameter vector that ends the restarts.
    pub tol: f64,
    pub optimizer: NelderMeadOptions,
    pub kalman: KalmanOptions,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_outer: 50,
            tol: 1e-6,
            optimizer: NelderMeadOptions {
                tol_x: 1e-7,
                tol_f: 1e-12,
                max_iter: 2_000,
                initial_step: Some(0.1),
            },
            kalman: KalmanOptions {
                steady_state_tol: Some(1e-12),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftStart {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    /// Diagonal of α.
    pub alpha: Vec<f64>,
}

impl DriftStart {
    /// `b = a = 0`, `α = β`.
    pub fn neutral(beta: &Matrix) -> Self {
        let n = beta.rows();
        Self {
            b: vec![0.0; n],
            a: vec![0.0; n],
            alpha: beta.diag(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftFit {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub alpha: Matrix,
    pub loglik: f64,
    pub converged: bool,
    pub outer_iterations: usize,
    pub evaluations: usize,
    /// Filtered factor at the first and last observation date.
    pub first_filtered: Vec<f64>,
    pub last_filtered: Vec<f64>,
}

/// Measurement intercept `d(b) = d0 + G b`, which is affine in `b` because
/// `A(τ)` is.
struct Intercept {
    d0: Vec<f64>,
    g: Matrix,
    big_d: Matrix,
}

impl Intercept {
    fn new(beta: &Matrix, sigma_sqrt: &Matrix, delta: f64, tau: &[usize]) -> Result<Self, EstimationError> {
        let max = check_tau(tau)?;
        let n = beta.rows();
        let p0 = VasicekParams::new(vec![0.0; n], beta.clone(), sigma_sqrt.clone(), delta)?;
        let table = AffineTable::new(&p0, max)?;
        let m = tau.len();
        let mut d0 = Vec::with_capacity(m);
        let mut g = Matrix::zeros(m, n);
        let mut big_d = Matrix::zeros(m, n);
        let mut cum = vec![0.0; n];
        let mut lag = 1;
        for (i, &t) in tau.iter().enumerate() {
            // cum = Σ_{l<τ} B(l)
            while lag < t {
                for (c, v) in cum.iter_mut().zip(table.b(lag)) {
                    *c += v;
                }
                lag += 1;
            }
            let scale = t as f64 * delta;
            d0.push(-table.a(t) / scale);
            for j in 0..n {
                g[(i, j)] = cum[j] / scale;
                big_d[(i, j)] = table.b(t)[j] / scale;
            }
        }
        Ok(Self { d0, g, big_d })
    }

    fn d(&self, b: &[f64]) -> Vec<f64> {
        numerics::add(&self.d0, &self.g.mul_vec(b))
    }
}

/// Least-squares factor `x` with `D x ≈ y − d` for a single cross-section.
pub fn cross_section_factor(params: &VasicekParams, tau: &[usize], y: &[f64]) -> Result<Vec<f64>, EstimationError> {
    if y.len() != tau.len() {
        return Err(EstimationError::Dimension {
            what: "cross-section",
            expected: tau.len(),
            found: y.len(),
        });
    }
    let (d, big_d) = super::kalman::measurement_system(params, tau)?;
    Ok(least_squares(&big_d, &numerics::sub(y, &d))?)
}

/// Maximizes the filter likelihood of `obs` over `b`, `a` and diagonal `α`.
///
/// Coordinates are `b/√Σ_ii`, `a/√Σ_ii` and `atanh(α_ii)`. The simplex is
/// restarted at each optimum until the parameters move less than `tol`.
#[allow(clippy::too_many_arguments)]
pub fn fit_drift_mle(
    obs: &[Vec<f64>],
    tau: &[usize],
    delta: f64,
    beta: &Matrix,
    sigma_sqrt: &Matrix,
    s: &Matrix,
    x_init: &[f64],
    start: &DriftStart,
    opts: &MleOptions,
) -> Result<DriftFit, EstimationError> {
    let n = beta.rows();
    if !beta.is_diagonal() {
        return Err(EstimationError::InvalidConfig("beta must be diagonal".into()));
    }
    for (what, found) in [("b start", start.b.len()), ("a start", start.a.len()), ("alpha start", start.alpha.len())] {
        if found != n {
            return Err(EstimationError::Dimension { what, expected: n, found });
        }
    }
    let intercept = Intercept::new(beta, sigma_sqrt, delta, tau)?;
    let scale: Vec<f64> = (0..n)
        .map(|i| (0..=i).map(|j| sigma_sqrt[(i, j)].powi(2)).sum::<f64>().sqrt())
        .collect();
    let template = StateSpaceSpec::new(
        vec![0.0; n],
        Matrix::from_diag(&start.alpha.iter().map(|v| v.clamp(-0.999_999, 0.999_999)).collect::<Vec<_>>()),
        sigma_sqrt.clone(),
        intercept.d0.clone(),
        intercept.big_d.clone(),
        s.clone(),
        tau.to_vec(),
    )?;
    let norm = (obs.len() * tau.len()).max(1) as f64;

    let unpack = |p: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let b = (0..n).map(|i| p[i] * scale[i]).collect();
        let a = (0..n).map(|i| p[n + i] * scale[i]).collect();
        let alpha = (0..n).map(|i| super::bounded_tanh(p[2 * n + i])).collect();
        (b, a, alpha)
    };
    let spec_at = |p: &[f64]| -> StateSpaceSpec {
        let (b, a, alpha) = unpack(p);
        let mut spec = template.clone();
        spec.d = intercept.d(&b);
        spec.a = a;
        spec.alpha = Matrix::from_diag(&alpha);
        spec
    };
    // validates dimensions of obs and x_init once, with the error surfaced
    let mut p: Vec<f64> = (0..n)
        .map(|i| start.b[i] / scale[i])
        .chain((0..n).map(|i| start.a[i] / scale[i]))
        .chain(start.alpha.iter().map(|v| v.clamp(-0.999_999, 0.999_999).atanh()))
        .collect();
    kalman_loglik(&spec_at(&p), obs, x_init, &opts.kalman)?;

    let objective = |q: &[f64]| -> f64 {
        if !super::within_tanh_limit(&q[2 * n..]) {
            return f64::INFINITY;
        }
        match kalman_loglik(&spec_at(q), obs, x_init, &opts.kalman) {
            Ok(s) if s.loglik.is_finite() => -s.loglik / norm,
            _ => f64::INFINITY,
        }
    };
    let mut converged = false;
    let mut outer = 0;
    let mut evaluations = 0;
    let mut value = objective(&p);
    while outer < opts.max_outer {
        outer += 1;
        let res = nelder_mead(&objective, &p, &opts.optimizer)?;
        evaluations += res.evaluations;
        let change = numerics::max_abs_diff(&res.argmin, &p);
        let gain = value - res.min_value;
        p = res.argmin;
        value = res.min_value;
        if change < opts.tol && res.converged {
            converged = true;
            break;
        }
        // a weakly identified direction lets the parameters wander while the
        // likelihood no longer improves; stop without claiming convergence
        if gain < opts.optimizer.tol_f {
            break;
        }
    }
    let spec = spec_at(&p);
    let summary = kalman_loglik(&spec, obs, x_init, &opts.kalman)?;
    let (b, a, alpha) = unpack(&p);
    Ok(DriftFit {
        b,
        a,
        alpha: Matrix::from_diag(&alpha),
        loglik: summary.loglik,
        converged,
        outer_iterations: outer,
        evaluations,
        first_filtered: summary.first_filtered,
        last_filtered: summary.last_filtered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::kalman::measurement_system;
    use crate::numerics::RngStream;

    #[test]
    fn intercept_is_affine_in_b() {
        let beta = Matrix::from_diag(&[0.98, 0.7]);
        let l = Matrix::from_rows(&[vec![0.01, 0.0], vec![0.003, 0.004]]).unwrap();
        let tau = [1, 3, 10, 40];
        let ic = Intercept::new(&beta, &l, 1.0 / 252.0, &tau).unwrap();
        let b = vec![0.0004, -0.0002];
        let p = VasicekParams::new(b.clone(), beta, l, 1.0 / 252.0).unwrap();
        let (d, big_d) = measurement_system(&p, &tau).unwrap();
        assert!(numerics::max_abs_diff(&ic.d(&b), &d) < 1e-15);
        assert!(ic.big_d.max_abs_diff(&big_d) < 1e-15);
    }

    #[test]
    fn cross_section_inverts_noiseless_curve() {
        let p = VasicekParams::new(
            vec![0.0001, 0.0],
            Matrix::from_diag(&[0.99, 0.8]),
            Matrix::from_diag(&[0.01, 0.02]),
            1.0 / 12.0,
        )
        .unwrap();
        let tau = [1, 6, 24, 60];
        let (d, big_d) = measurement_system(&p, &tau).unwrap();
        let x = [0.02, -0.005];
        let y = numerics::add(&d, &big_d.mul_vec(&x));
        let got = cross_section_factor(&p, &tau, &y).unwrap();
        assert!(numerics::max_abs_diff(&got, &x) < 1e-12);
    }

    #[test]
    fn recovers_one_factor_transition() {
        let delta = 1.0 / 252.0;
        let beta = Matrix::from_diag(&[0.99]);
        let l = Matrix::from_diag(&[0.0008]);
        let (a_true, alpha_true) = (0.0002, 0.98);
        let tau = vec![1, 5, 21];
        let p = VasicekParams::new(vec![0.0], beta.clone(), l.clone(), delta).unwrap();
        let (d, big_d) = measurement_system(&p, &tau).unwrap();
        let mut rng = RngStream::new(11, 0);
        let mut x = a_true / (1.0 - alpha_true);
        let x0 = x;
        let mut obs = Vec::new();
        for _ in 0..2000 {
            x = a_true + alpha_true * x + 0.0008 * rng.standard_normal();
            obs.push((0..3).map(|i| d[i] + big_d[(i, 0)] * x + 1e-5 * rng.standard_normal()).collect());
        }
        let s = Matrix::identity(3).scale(1e-10);
        let fit = fit_drift_mle(
            &obs,
            &tau,
            delta,
            &beta,
            &l,
            &s,
            &[x0],
            &DriftStart::neutral(&beta),
            &MleOptions::default(),
        )
        .unwrap();
        // AR(1) standard error of α is √((1−α²)/K) ≈ 0.0045
        assert!((fit.alpha[(0, 0)] - alpha_true).abs() < 3.0 * 0.0045, "alpha {}", fit.alpha[(0, 0)]);
        assert!(fit.b[0].abs() < 1e-4, "b {}", fit.b[0]);
        let start = kalman_loglik(
            &StateSpaceSpec::from_model(&p, vec![0.0], beta.clone(), tau.clone(), s.clone()).unwrap(),
            &obs,
            &[x0],
            &KalmanOptions::default(),
        )
        .unwrap();
        assert!(fit.loglik >= start.loglik - 1e-6);
    }
}
