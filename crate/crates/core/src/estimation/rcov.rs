//! Realized covariation of yield increments and the cross-sectional fit of
//! diagonal β and Σ to it.

use serde::{Deserialize, Serialize};

use super::kalman::check_tau;
use super::EstimationError;
use crate::numerics::{self, clip_spectrum, least_squares, nelder_mead, spd_sqrt, Matrix, NelderMeadOptions, RngStream};

fn check_panel(panel: &[Vec<f64>]) -> Result<usize, EstimationError> {
    if panel.len() < 2 {
        return Err(EstimationError::InsufficientData {
            needed: 2,
            found: panel.len(),
        });
    }
    let m = panel[0].len();
    if let Some(row) = panel.iter().find(|r| r.len() != m) {
        return Err(EstimationError::Dimension {
            what: "yield panel row",
            expected: m,
            found: row.len(),
        });
    }
    Ok(m)
}

/// `(1/K) Σ_k (y_i(k) − y_i(k−1))(y_j(k) − y_j(k−1))` over the `K = rows − 1`
/// increments of `panel`.
pub fn realized_cov(panel: &[Vec<f64>], i: usize, j: usize) -> Result<f64, EstimationError> {
    let m = check_panel(panel)?;
    if i >= m || j >= m {
        return Err(EstimationError::Dimension {
            what: "maturity index",
            expected: m,
            found: i.max(j) + 1,
        });
    }
    let k = panel.len() - 1;
    let sum: f64 = panel
        .windows(2)
        .map(|w| (w[1][i] - w[0][i]) * (w[1][j] - w[0][j]))
        .sum();
    Ok(sum / k as f64)
}

pub fn realized_cov_matrix(panel: &[Vec<f64>]) -> Result<Matrix, EstimationError> {
    let m = check_panel(panel)?;
    let mut out = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = realized_cov(panel, i, j)?;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// `v_a(τ) = Σ_{s<τ} β_a^s` for every τ on the grid, row per maturity.
fn power_sums(beta: &[f64], tau: &[usize]) -> Vec<Vec<f64>> {
    let n = beta.len();
    let mut out = Vec::with_capacity(tau.len());
    let mut sum = vec![0.0; n];
    let mut pow = vec![1.0; n];
    let mut s = 0;
    for &t in tau {
        while s < t {
            for a in 0..n {
                sum[a] += pow[a];
                pow[a] *= beta[a];
            }
            s += 1;
        }
        out.push(sum.clone());
    }
    out
}

fn model_from_sums(v: &[Vec<f64>], sigma: &Matrix, tau: &[usize]) -> Matrix {
    let m = tau.len();
    let mut out = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let val = sigma.quad_form(&v[i], &v[j]) / (tau[i] as f64 * tau[j] as f64);
            out[(i, j)] = val;
            out[(j, i)] = val;
        }
    }
    out
}

/// Asymptotic realized covariation of yields at lags `tau` for diagonal β:
/// `v(τ_i)ᵀ Σ v(τ_j) / (τ_i τ_j)` with `v` the power sums of β.
pub fn model_rcov(beta_diag: &[f64], sigma: &Matrix, tau: &[usize]) -> Result<Matrix, EstimationError> {
    check_tau(tau)?;
    let n = beta_diag.len();
    if sigma.rows() != n || sigma.cols() != n {
        return Err(EstimationError::Dimension {
            what: "sigma",
            expected: n,
            found: sigma.rows(),
        });
    }
    Ok(model_from_sums(&power_sums(beta_diag, tau), sigma, tau))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weights {
    /// `w_ij = 1{i=j}`.
    Diagonal,
    /// `w_ij = 1`.
    Full,
    Custom(Matrix),
}

impl Default for Weights {
    fn default() -> Self {
        Weights::Diagonal
    }
}

impl Weights {
    fn matrix(&self, m: usize) -> Result<Matrix, EstimationError> {
        match self {
            Weights::Diagonal => Ok(Matrix::identity(m)),
            Weights::Full => Ok(Matrix::from_row_major(m, m, vec![1.0; m * m])?),
            Weights::Custom(w) => {
                if w.rows() != m || w.cols() != m {
                    return Err(EstimationError::Dimension {
                        what: "weights",
                        expected: m,
                        found: w.rows(),
                    });
                }
                for i in 0..m {
                    for j in 0..m {
                        if !(w[(i, j)] >= 0.0) || w[(i, j)] != w[(j, i)] {
                            return Err(EstimationError::InvalidConfig(
                                "weights must be symmetric and nonnegative".into(),
                            ));
                        }
                    }
                }
                Ok(w.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RcovOptions {
    pub starts: usize,
    pub seed: u64,
    pub optimizer: NelderMeadOptions,
}

impl Default for RcovOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            seed: 0x5eed_0001,
            optimizer: NelderMeadOptions {
                tol_x: 1e-10,
                tol_f: 1e-20,
                max_iter: 4_000,
                initial_step: Some(0.1),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RcovFit {
    /// Diagonal, sorted descending.
    pub beta: Matrix,
    pub sigma_sqrt: Matrix,
    /// `Σ w (RCov − model)² / Σ w RCov²` at the optimum.
    pub objective: f64,
    pub converged: bool,
    pub evaluations: usize,
}

struct Problem<'a> {
    rcov: &'a Matrix,
    w: Matrix,
    tau: &'a [usize],
    n: usize,
    scale: f64,
    norm: f64,
}

impl Problem<'_> {
    fn objective(&self, v: &[Vec<f64>], sigma: &Matrix) -> f64 {
        let model = model_from_sums(v, sigma, self.tau);
        let m = self.tau.len();
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let w = self.w[(i, j)];
                if w > 0.0 {
                    let r = self.rcov[(i, j)] - model[(i, j)];
                    acc += w * r * r;
                }
            }
        }
        if acc.is_nan() {
            f64::INFINITY
        } else {
            acc / self.norm
        }
    }

    /// Splits the unconstrained vector into β diagonal and Σ½.
    fn unpack(&self, p: &[f64]) -> (Vec<f64>, Matrix) {
        let n = self.n;
        let beta: Vec<f64> = p[..n].iter().map(|u| super::bounded_tanh(*u)).collect();
        let mut l = Matrix::zeros(n, n);
        let mut idx = n;
        for i in 0..n {
            for j in 0..=i {
                l[(i, j)] = if i == j { p[idx].exp() } else { p[idx] } * self.scale;
                idx += 1;
            }
        }
        (beta, l)
    }

    fn pack(&self, beta: &[f64], l: &Matrix) -> Vec<f64> {
        let mut p: Vec<f64> = beta
            .iter()
            .map(|b| b.clamp(-1.0 + 1e-12, 1.0 - 1e-12).atanh().clamp(-super::TANH_LIMIT, super::TANH_LIMIT))
            .collect();
        for i in 0..self.n {
            for j in 0..=i {
                let v = l[(i, j)] / self.scale;
                p.push(if i == j { v.max(1e-300).ln() } else { v });
            }
        }
        p
    }

    fn full_objective(&self, p: &[f64]) -> f64 {
        if !super::within_tanh_limit(&p[..self.n]) {
            return f64::INFINITY;
        }
        let (beta, l) = self.unpack(p);
        self.objective(&power_sums(&beta, self.tau), &l.outer_self())
    }

    /// Weighted linear least squares for Σ given β, projected onto SPD matrices.
    fn profile_sigma(&self, beta: &[f64]) -> Matrix {
        let n = self.n;
        let m = self.tau.len();
        let v = power_sums(beta, self.tau);
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for i in 0..m {
            for j in i..m {
                let w = if i == j { self.w[(i, j)] } else { self.w[(i, j)] + self.w[(j, i)] };
                if w <= 0.0 {
                    continue;
                }
                let sw = w.sqrt() / self.scale.powi(2);
                let tt = self.tau[i] as f64 * self.tau[j] as f64;
                rows.push(
                    pairs
                        .iter()
                        .map(|&(a, b)| {
                            let c = if a == b {
                                v[i][a] * v[j][a]
                            } else {
                                v[i][a] * v[j][b] + v[i][b] * v[j][a]
                            };
                            sw * c / tt
                        })
                        .collect::<Vec<f64>>(),
                );
                rhs.push(sw * self.rcov[(i, j)]);
            }
        }
        let mut sigma = Matrix::zeros(n, n);
        let solved = Matrix::from_rows(&rows)
            .ok()
            .filter(|a| a.rows() >= a.cols())
            .and_then(|a| least_squares(&a, &rhs).ok());
        match solved {
            Some(x) => {
                for (&(a, b), &s) in pairs.iter().zip(&x) {
                    sigma[(a, b)] = s;
                    sigma[(b, a)] = s;
                }
            }
            None => {
                for a in 0..n {
                    sigma[(a, a)] = self.scale.powi(2) / n as f64;
                }
            }
        }
        let floor = 1e-6 * self.scale.powi(2);
        clip_spectrum(&sigma, floor).unwrap_or_else(|_| Matrix::identity(n).scale(floor))
    }
}

/// Fits diagonal β ∈ (−1,1)ⁿ and lower-triangular Σ½ to a realized
/// covariation matrix on the lag grid `tau`.
///
/// Each start draws β, sets Σ from a linear fit given β, refines β with Σ
/// profiled out, then polishes all parameters jointly. Factors of the best
/// fit are ordered by decreasing β.
pub fn fit_beta_sigma_rcov(
    rcov: &Matrix,
    tau: &[usize],
    weights: &Weights,
    n: usize,
    opts: &RcovOptions,
) -> Result<RcovFit, EstimationError> {
    check_tau(tau)?;
    let m = tau.len();
    if rcov.rows() != m || rcov.cols() != m {
        return Err(EstimationError::Dimension {
            what: "realized covariation",
            expected: m,
            found: rcov.rows(),
        });
    }
    if n == 0 || n > m {
        return Err(EstimationError::InvalidConfig(format!(
            "factor count {n} must be between 1 and the number of maturities {m}"
        )));
    }
    if opts.starts == 0 {
        return Err(EstimationError::InvalidConfig("at least one start is required".into()));
    }
    numerics::check_finite(rcov.as_slice(), "realized covariation")?;
    let w = weights.matrix(m)?;
    let mut norm = 0.0;
    for i in 0..m {
        for j in 0..m {
            norm += w[(i, j)] * rcov[(i, j)].powi(2);
        }
    }
    if !(norm > 0.0) {
        return Err(EstimationError::InvalidConfig(
            "weighted realized covariation is identically zero".into(),
        ));
    }
    let scale = rcov[(0, 0)].abs().sqrt().max(1e-300);
    let problem = Problem {
        rcov,
        w,
        tau,
        n,
        scale,
        norm,
    };

    let mut rng = RngStream::new(opts.seed, 0);
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    let mut evaluations = 0;
    for _ in 0..opts.starts {
        let mut beta0: Vec<f64> = (0..n).map(|_| 1.0 - 10f64.powf(-(0.3 + 2.7 * rng.uniform()))).collect();
        beta0.sort_by(|a, b| b.total_cmp(a));
        let u0: Vec<f64> = beta0.iter().map(|b| b.atanh()).collect();
        let profiled = nelder_mead(
            |u| {
                if !super::within_tanh_limit(u) {
                    return f64::INFINITY;
                }
                let beta: Vec<f64> = u.iter().map(|x| super::bounded_tanh(*x)).collect();
                let sigma = problem.profile_sigma(&beta);
                problem.objective(&power_sums(&beta, tau), &sigma)
            },
            &u0,
            &NelderMeadOptions {
                tol_x: 1e-8,
                tol_f: 1e-14,
                max_iter: 5_000,
                initial_step: Some(0.2),
            },
        )?;
        evaluations += profiled.evaluations;
        let beta: Vec<f64> = profiled.argmin.iter().map(|x| super::bounded_tanh(*x)).collect();
        let l = spd_sqrt(&problem.profile_sigma(&beta))?;
        let mut p = problem.pack(&beta, &l);
        let mut res = nelder_mead(|x| problem.full_objective(x), &p, &opts.optimizer)?;
        evaluations += res.evaluations;
        // restart the simplex at its optimum until it stops moving
        for _ in 0..4 {
            p = res.argmin.clone();
            let again = nelder_mead(|x| problem.full_objective(x), &p, &opts.optimizer)?;
            evaluations += again.evaluations;
            let moved = again.min_value < res.min_value;
            res = again;
            if !moved {
                break;
            }
        }
        if best.as_ref().map_or(true, |b| res.min_value < b.1) {
            best = Some((res.argmin, res.min_value, res.converged));
        }
    }
    let (p, objective, converged) = best.expect("at least one start");
    let (beta, l) = problem.unpack(&p);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| beta[b].total_cmp(&beta[a]));
    let sorted: Vec<f64> = order.iter().map(|&i| beta[i]).collect();
    let sigma = l.outer_self().permute_symmetric(&order);
    Ok(RcovFit {
        beta: Matrix::from_diag(&sorted),
        sigma_sqrt: spd_sqrt(&sigma)?,
        objective,
        converged,
        evaluations,
    })
}
