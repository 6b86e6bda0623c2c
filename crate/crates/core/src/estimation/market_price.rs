//! Market price of risk implied by pricing-measure and real-world drifts.

use super::EstimationError;
use crate::crc::MarketPriceOfRisk;
use crate::numerics::{self, solve_lower_triangular, solve_lower_triangular_matrix, Matrix};

/// `λ = Σ^{−½}(b − a)`, `Λ = Σ^{−½}(β − α)` by forward substitution
/// against the lower-triangular root.
pub fn infer_market_price(
    b: &[f64],
    a: &[f64],
    beta: &Matrix,
    alpha: &Matrix,
    sigma_sqrt: &Matrix,
) -> Result<MarketPriceOfRisk, EstimationError> {
    let n = b.len();
    for (what, found) in [
        ("real-world drift", a.len()),
        ("beta", beta.rows()),
        ("alpha", alpha.rows()),
        ("sigma_sqrt", sigma_sqrt.rows()),
    ] {
        if found != n {
            return Err(EstimationError::Dimension { what, expected: n, found });
        }
    }
    if !sigma_sqrt.is_lower_triangular() {
        return Err(crate::error::ModelError::NotLowerTriangular.into());
    }
    let lambda = solve_lower_triangular(sigma_sqrt, &numerics::sub(b, a))?;
    let big_lambda = solve_lower_triangular_matrix(sigma_sqrt, &(beta - alpha))?;
    Ok(MarketPriceOfRisk::new(lambda, big_lambda)?)
}

/// `a = b − Σ½λ`, `α = β − Σ½Λ`.
pub fn real_world_transition(
    b: &[f64],
    beta: &Matrix,
    sigma_sqrt: &Matrix,
    mpr: &MarketPriceOfRisk,
) -> (Vec<f64>, Matrix) {
    let a = numerics::sub(b, &sigma_sqrt.mul_vec(&mpr.lambda));
    let alpha = beta - &(sigma_sqrt * &mpr.big_lambda);
    (a, alpha)
}
