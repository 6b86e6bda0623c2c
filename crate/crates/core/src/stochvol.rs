//! Heston-like dynamics for the factor variances `Σ_ii(t)`:
//! `Σ_ii(t) = φ_i + φ_ii Σ_ii(t−1) + √Σ_ii(t−1) (Φ½ε̃(t))_i`,
//! combined with fixed factor correlations into `Σ(t)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, least_squares, psd_sqrt, spd_sqrt, Matrix, NumericsError, RngStream};

/// Absorbing lower bound for simulated variances.
pub const VARIANCE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StochVolError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("assembled covariance is not positive definite (smallest eigenvalue {min_eigenvalue})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("variance regression for factor {component} is rank deficient")]
    RankDeficient { component: usize },
    #[error("need at least {needed} observations, found {found}")]
    SeriesTooShort { needed: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStochVol", into = "RawStochVol")]
pub struct StochVolParams {
    varphi: Vec<f64>,
    phi: Vec<f64>,
    phi_sqrt: Matrix,
    corr_factors: Matrix,
    cross_corr: Matrix,
}

#[derive(Serialize, Deserialize)]
struct RawStochVol {
    varphi: Vec<f64>,
    phi: Vec<f64>,
    phi_sqrt: Matrix,
    corr_factors: Matrix,
    cross_corr: Matrix,
}

impl TryFrom<RawStochVol> for StochVolParams {
    type Error = StochVolError;

    fn try_from(r: RawStochVol) -> Result<Self, Self::Error> {
        Self::new(r.varphi, r.phi, r.phi_sqrt, r.corr_factors, r.cross_corr)
    }
}

impl From<StochVolParams> for RawStochVol {
    fn from(p: StochVolParams) -> Self {
        Self {
            varphi: p.varphi,
            phi: p.phi,
            phi_sqrt: p.phi_sqrt,
            corr_factors: p.corr_factors,
            cross_corr: p.cross_corr,
        }
    }
}

fn check_square(m: &Matrix, n: usize, what: &'static str) -> Result<(), StochVolError> {
    if m.rows() != n || m.cols() != n {
        return Err(StochVolError::Dimension {
            what,
            expected: n,
            found: m.rows(),
        });
    }
    numerics::check_finite(m.as_slice(), what)?;
    Ok(())
}

impl StochVolParams {
    /// `phi` is the diagonal of the persistence matrix; `cross_corr[(i, j)]`
    /// is the correlation of `ε_i` with `ε̃_j`.
    pub fn new(
        varphi: Vec<f64>,
        phi: Vec<f64>,
        phi_sqrt: Matrix,
        corr_factors: Matrix,
        cross_corr: Matrix,
    ) -> Result<Self, StochVolError> {
        let n = varphi.len();
        if phi.len() != n {
            return Err(StochVolError::Dimension {
                what: "phi",
                expected: n,
                found: phi.len(),
            });
        }
        numerics::check_finite(&varphi, "varphi")?;
        numerics::check_finite(&phi, "phi")?;
        check_square(&phi_sqrt, n, "phi_sqrt")?;
        check_square(&corr_factors, n, "corr_factors")?;
        check_square(&cross_corr, n, "cross_corr")?;
        if varphi.iter().any(|v| *v < 0.0) {
            return Err(StochVolError::Invalid("varphi must be nonnegative".into()));
        }
        if phi.iter().any(|p| p.abs() > 1.0) {
            return Err(StochVolError::Invalid("phi entries must lie in [-1, 1]".into()));
        }
        for i in 0..n {
            if corr_factors[(i, i)] != 1.0 {
                return Err(StochVolError::Invalid("corr_factors needs a unit diagonal".into()));
            }
            for j in 0..i {
                if corr_factors[(i, j)] != corr_factors[(j, i)] {
                    return Err(StochVolError::Invalid("corr_factors must be symmetric".into()));
                }
            }
        }
        if n > 0 && numerics::min_symmetric_eigenvalue(&corr_factors)? < -1e-12 {
            return Err(StochVolError::Invalid("corr_factors must be positive semi-definite".into()));
        }
        if cross_corr.as_slice().iter().any(|c| c.abs() > 1.0) {
            return Err(StochVolError::Invalid("cross correlations must lie in [-1, 1]".into()));
        }
        let p = Self {
            varphi,
            phi,
            phi_sqrt,
            corr_factors,
            cross_corr,
        };
        // the joint innovation covariance must be valid
        p.sampler(false)?;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.varphi.len()
    }

    pub fn varphi(&self) -> &[f64] {
        &self.varphi
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn phi_sqrt(&self) -> &Matrix {
        &self.phi_sqrt
    }

    pub fn corr_factors(&self) -> &Matrix {
        &self.corr_factors
    }

    pub fn cross_corr(&self) -> &Matrix {
        &self.cross_corr
    }

    /// Sampler for `(ε, ε̃)`; `zero_cross` draws them independently.
    pub fn sampler(&self, zero_cross: bool) -> Result<InnovationSampler, StochVolError> {
        InnovationSampler::new(&self.cross_corr, zero_cross)
    }
}

/// Draws `(ε, ε̃)` jointly Gaussian with identity marginals and
/// `Cov(ε, ε̃) = C` as `ε = z₁`, `ε̃ = Cᵀz₁ + Lz₂` with `LLᵀ = 𝟙 − CᵀC`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationSampler {
    c_t: Option<Matrix>,
    l: Matrix,
}

impl InnovationSampler {
    fn new(c: &Matrix, zero_cross: bool) -> Result<Self, StochVolError> {
        let n = c.rows();
        if zero_cross || c.max_abs() == 0.0 {
            return Ok(Self {
                c_t: None,
                l: Matrix::identity(n),
            });
        }
        let c_t = c.transpose();
        let mut rest = &Matrix::identity(n) - &(&c_t * c);
        rest.symmetrize();
        let min = numerics::min_symmetric_eigenvalue(&rest)?;
        if min < -1e-12 {
            return Err(StochVolError::Invalid(format!(
                "cross correlations do not form a valid joint covariance (eigenvalue {min})"
            )));
        }
        let l = psd_sqrt(&rest, 1e-12)?;
        Ok(Self { c_t: Some(c_t), l })
    }

    pub fn draw(&self, rng: &mut RngStream) -> (Vec<f64>, Vec<f64>) {
        let n = self.l.rows();
        let eps = rng.standard_normal_vec(n);
        let z2 = rng.standard_normal_vec(n);
        let mut tilde = self.l.mul_vec(&z2);
        if let Some(c_t) = &self.c_t {
            tilde = numerics::add(&tilde, &c_t.mul_vec(&eps));
        }
        (eps, tilde)
    }
}

/// One step of the variance recursion, floored at [`VARIANCE_FLOOR`].
pub fn stochvol_step(params: &StochVolParams, variances: &[f64], eps_tilde: &[f64]) -> Vec<f64> {
    let n = params.n();
    assert_eq!(variances.len(), n, "variance vector length");
    assert_eq!(eps_tilde.len(), n, "innovation length");
    let shock = params.phi_sqrt.mul_vec(eps_tilde);
    (0..n)
        .map(|i| {
            let v = variances[i].max(VARIANCE_FLOOR);
            (params.varphi[i] + params.phi[i] * v + v.sqrt() * shock[i]).max(VARIANCE_FLOOR)
        })
        .collect()
}

/// `Σ_ij = ρ_ij √(Σ_ii Σ_jj)` and its lower-triangular root.
pub fn assemble_sigma(variances: &[f64], corr_factors: &Matrix) -> Result<(Matrix, Matrix), StochVolError> {
    let n = variances.len();
    check_square(corr_factors, n, "corr_factors")?;
    if variances.iter().any(|v| !(*v > 0.0)) {
        return Err(StochVolError::Invalid("variances must be positive".into()));
    }
    let sd: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
    let mut sigma = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            sigma[(i, j)] = if i == j { variances[i] } else { corr_factors[(i, j)] * sd[i] * sd[j] };
        }
    }
    match spd_sqrt(&sigma) {
        Ok(l) => Ok((sigma, l)),
        Err(NumericsError::NotPositiveDefinite { .. }) => Err(StochVolError::NotPositiveDefinite {
            min_eigenvalue: numerics::min_symmetric_eigenvalue(&sigma)?,
        }),
        Err(e) => Err(e.into()),
    }
}

/// Time average of `Σ_ij/√(Σ_iiΣ_jj)` over a series of covariance matrices.
pub fn average_correlation(sigmas: &[Matrix]) -> Result<Matrix, StochVolError> {
    let first = sigmas.first().ok_or(StochVolError::SeriesTooShort { needed: 1, found: 0 })?;
    let n = first.rows();
    let mut acc = Matrix::zeros(n, n);
    for s in sigmas {
        check_square(s, n, "covariance series")?;
        for i in 0..n {
            for j in 0..n {
                acc[(i, j)] += if i == j { 1.0 } else { s[(i, j)] / (s[(i, i)] * s[(j, j)]).sqrt() };
            }
        }
    }
    let mut out = acc.scale(1.0 / sigmas.len() as f64);
    for i in 0..n {
        out[(i, i)] = 1.0;
    }
    Ok(out)
}

fn covariance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Matrix {
    let t = a.len() as f64;
    let (n, m) = (a[0].len(), b[0].len());
    let ma: Vec<f64> = (0..n).map(|i| a.iter().map(|r| r[i]).sum::<f64>() / t).collect();
    let mb: Vec<f64> = (0..m).map(|j| b.iter().map(|r| r[j]).sum::<f64>() / t).collect();
    let mut out = Matrix::zeros(n, m);
    for (ra, rb) in a.iter().zip(b) {
        for i in 0..n {
            for j in 0..m {
                out[(i, j)] += (ra[i] - ma[i]) * (rb[j] - mb[j]);
            }
        }
    }
    out.scale(1.0 / t)
}

/// Least-squares estimate of `(φ, φ_ii, Φ)` from a variance series, and the
/// correlations of the model residuals `ε̂` with the whitened variance
/// residuals `ε̃̂ = Φ^{−½} r`.
///
/// `residuals[t − 1]` is `ε̂(t)` for `t = 1..variances.len()`; pass `None`
/// to leave `cross_corr` at zero.
pub fn fit_stochvol(
    variances: &[Vec<f64>],
    residuals: Option<&[Vec<f64>]>,
    corr_factors: Matrix,
) -> Result<StochVolParams, StochVolError> {
    let len = variances.len();
    let n = variances.first().map_or(0, Vec::len);
    if len < 4 {
        return Err(StochVolError::SeriesTooShort { needed: 4, found: len });
    }
    if let Some(row) = variances.iter().find(|r| r.len() != n) {
        return Err(StochVolError::Dimension {
            what: "variance series",
            expected: n,
            found: row.len(),
        });
    }
    if variances.iter().flatten().any(|v| !(*v > 0.0)) {
        return Err(StochVolError::Invalid("variances must be positive".into()));
    }
    let mut varphi = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    let mut resid: Vec<Vec<f64>> = vec![vec![0.0; n]; len - 1];
    for i in 0..n {
        let mut design = Matrix::zeros(len - 1, 2);
        let mut y = Vec::with_capacity(len - 1);
        for t in 1..len {
            let s = variances[t - 1][i].sqrt();
            design[(t - 1, 0)] = 1.0 / s;
            design[(t - 1, 1)] = s;
            y.push(variances[t][i] / s);
        }
        let coef = least_squares(&design, &y).map_err(|e| match e {
            NumericsError::RankDeficient { .. } => StochVolError::RankDeficient { component: i },
            other => other.into(),
        })?;
        for t in 0..len - 1 {
            resid[t][i] = y[t] - coef[0] * design[(t, 0)] - coef[1] * design[(t, 1)];
        }
        varphi.push(coef[0].max(0.0));
        phi.push(coef[1].clamp(-1.0, 1.0));
    }
    let mut big_phi = covariance(&resid, &resid);
    big_phi.symmetrize();
    let phi_sqrt = psd_sqrt(&big_phi, 1e-14)?;
    let mut cross = Matrix::zeros(n, n);
    if let Some(eps) = residuals {
        if eps.len() != len - 1 {
            return Err(StochVolError::Dimension {
                what: "model residual series",
                expected: len - 1,
                found: eps.len(),
            });
        }
        if let Some(row) = eps.iter().find(|r| r.len() != n) {
            return Err(StochVolError::Dimension {
                what: "model residual",
                expected: n,
                found: row.len(),
            });
        }
        if (0..n).all(|i| phi_sqrt[(i, i)] > 0.0) {
            let tilde: Vec<Vec<f64>> = resid
                .iter()
                .map(|r| numerics::solve_lower_triangular(&phi_sqrt, r))
                .collect::<Result<_, _>>()?;
            let c = covariance(eps, &tilde);
            let ve = covariance(eps, eps).diag();
            let vt = covariance(&tilde, &tilde).diag();
            for i in 0..n {
                for j in 0..n {
                    let d = (ve[i] * vt[j]).sqrt();
                    cross[(i, j)] = if d > 0.0 { (c[(i, j)] / d).clamp(-1.0, 1.0) } else { 0.0 };
                }
            }
        }
    }
    // sample cross correlations need not form a valid joint law; shrink
    // them towards zero until they do
    let mut shrink = 1.0;
    loop {
        match StochVolParams::new(varphi.clone(), phi.clone(), phi_sqrt.clone(), corr_factors.clone(), cross.scale(shrink)) {
            Err(StochVolError::Invalid(msg)) if msg.starts_with("cross") && shrink > 0.0 => {
                shrink = (shrink - 0.05f64).max(0.0);
            }
            other => return other,
        }
    }
}
