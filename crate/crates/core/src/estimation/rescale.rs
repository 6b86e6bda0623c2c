//! Conversion of a diagonal AR(1) fitted on a coarse grid to the fine grid
//! with `d` fine steps per coarse step.
//!
//! Coarse: `Z' = μ + γZ + Γ½ε`. Fine: `X' = c + DX + Ψ½ε`.

use super::EstimationError;
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct GridRescaling {
    pub c: Vec<f64>,
    /// Diagonal.
    pub d: Matrix,
    pub psi: Matrix,
}

fn check(mu: &[f64], diag: &Matrix, cov: &Matrix, what: &'static str) -> Result<(), EstimationError> {
    let n = mu.len();
    for (found, w) in [(diag.rows(), what), (diag.cols(), what), (cov.rows(), "covariance"), (cov.cols(), "covariance")] {
        if found != n {
            return Err(EstimationError::Dimension { what: w, expected: n, found });
        }
    }
    if !diag.is_diagonal() {
        return Err(EstimationError::InvalidConfig(format!("{what} must be diagonal")));
    }
    Ok(())
}

/// Fine-grid parameters `D = γ^{1/d}`, `c = (𝟙−γ)⁻¹(𝟙−γ^{1/d})μ`,
/// `Ψ_ij = Γ_ij (1−(γ_iγ_j)^{1/d}) / (1−γ_iγ_j)`.
pub fn rescale_grid(mu: &[f64], gamma: &Matrix, big_gamma: &Matrix, d: usize) -> Result<GridRescaling, EstimationError> {
    check(mu, gamma, big_gamma, "gamma")?;
    if d == 0 {
        return Err(EstimationError::InvalidConfig("grid ratio must be at least 1".into()));
    }
    let g = gamma.diag();
    for (index, &value) in g.iter().enumerate() {
        if !(value > 0.0 && value < 1.0) {
            return Err(EstimationError::InvalidGamma { index, value });
        }
    }
    let inv = 1.0 / d as f64;
    let root: Vec<f64> = g.iter().map(|x| x.powf(inv)).collect();
    let c = mu
        .iter()
        .zip(g.iter().zip(&root))
        .map(|(m, (gi, ri))| (1.0 - ri) / (1.0 - gi) * m)
        .collect();
    let n = mu.len();
    let mut psi = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let p = g[i] * g[j];
            psi[(i, j)] = big_gamma[(i, j)] * (1.0 - root[i] * root[j]) / (1.0 - p);
        }
    }
    Ok(GridRescaling {
        c,
        d: Matrix::from_diag(&root),
        psi,
    })
}

/// `d`-fold composition of the fine transition: returns `(μ, γ, Γ)`.
pub fn compose_grid(fine: &GridRescaling, d: usize) -> Result<(Vec<f64>, Matrix, Matrix), EstimationError> {
    check(&fine.c, &fine.d, &fine.psi, "D")?;
    let n = fine.c.len();
    let dd = fine.d.diag();
    let mut mu = vec![0.0; n];
    let mut gamma = vec![1.0; n];
    let mut cov = Matrix::zeros(n, n);
    for _ in 0..d {
        // Z ← c + D Z accumulates Σ_s D^s c; covariance Σ_s D^s Ψ D^s
        for i in 0..n {
            for j in 0..n {
                cov[(i, j)] += gamma[i] * gamma[j] * fine.psi[(i, j)];
            }
        }
        for i in 0..n {
            mu[i] += gamma[i] * fine.c[i];
            gamma[i] *= dd[i];
        }
    }
    Ok((mu, Matrix::from_diag(&gamma), cov))
}
