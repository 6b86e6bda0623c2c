//! Factorizations and triangular solves.

use super::matrix::Matrix;
use super::NumericsError;

const SYMMETRY_TOL: f64 = 1e-12;

/// True iff every eigenvalue of `a` lies strictly inside the unit disc.
///
/// Diagonal matrices are decided from their entries; the general case goes
/// through a real Schur decomposition.
pub fn stationary_check(a: &Matrix) -> Result<bool, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.is_diagonal() {
        return Ok(a.diag().iter().all(|d| d.abs() < 1.0));
    }
    Ok(spectral_radius(a)? < 1.0)
}

pub fn spectral_radius(a: &Matrix) -> Result<f64, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.rows() == 0 {
        return Ok(0.0);
    }
    let eig = a.to_nalgebra().complex_eigenvalues();
    Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(a: &Matrix) -> Result<f64, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let eig = a.to_nalgebra().symmetric_eigen();
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Symmetric matrix with the spectrum of `a` clipped from below at `floor`.
pub fn clip_spectrum(a: &Matrix, floor: f64) -> Result<Matrix, NumericsError> {
    check_symmetric(a)?;
    let eig = a.to_nalgebra().symmetric_eigen();
    let n = a.rows();
    let mut out = Matrix::zeros(n, n);
    for k in 0..n {
        let lam = eig.eigenvalues[k].max(floor);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += lam * eig.eigenvectors[(i, k)] * eig.eigenvectors[(j, k)];
            }
        }
    }
    out.symmetrize();
    Ok(out)
}

fn check_symmetric(s: &Matrix) -> Result<(), NumericsError> {
    if !s.is_square() {
        return Err(NumericsError::NotSquare {
            rows: s.rows(),
            cols: s.cols(),
        });
    }
    let scale = s.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..s.rows() {
        for j in 0..i {
            if (s[(i, j)] - s[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(NumericsError::NotSymmetric { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Cholesky root: lower-triangular `L` with positive diagonal and `L Lᵀ = S`.
pub fn spd_sqrt(s: &Matrix) -> Result<Matrix, NumericsError> {
    check_symmetric(s)?;
    let n = s.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(NumericsError::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

/// Cholesky root of a positive semi-definite matrix. Pivots below
/// `tol · max|S|` are treated as exact zeros and their column is zeroed.
pub fn psd_sqrt(s: &Matrix, tol: f64) -> Result<Matrix, NumericsError> {
    check_symmetric(s)?;
    let n = s.rows();
    let floor = tol * s.max_abs();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -floor.max(f64::MIN_POSITIVE) {
            return Err(NumericsError::NotPositiveDefinite { pivot: j, value: d });
        }
        if d <= floor {
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

/// Forward substitution for `L x = z`. Only the lower triangle of `l` is read.
pub fn solve_lower_triangular(l: &Matrix, z: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let n = l.rows();
    if !l.is_square() || z.len() != n {
        return Err(NumericsError::DimensionMismatch {
            expected: format!("square system of size {}", z.len()),
            found: format!("{}x{}", l.rows(), l.cols()),
        });
    }
    let mut x = vec![0.0; n];
    for i in 0..n {
        let d = l[(i, i)];
        if d == 0.0 {
            return Err(NumericsError::ZeroPivot { index: i });
        }
        let row = &l.row(i)[..i];
        let acc: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
        x[i] = (z[i] - acc) / d;
    }
    Ok(x)
}

/// Back substitution for `Lᵀ x = z` with `l` lower triangular.
pub fn solve_lower_transpose(l: &Matrix, z: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let n = l.rows();
    if !l.is_square() || z.len() != n {
        return Err(NumericsError::DimensionMismatch {
            expected: format!("square system of size {}", z.len()),
            found: format!("{}x{}", l.rows(), l.cols()),
        });
    }
    let mut x = z.to_vec();
    for i in (0..n).rev() {
        let d = l[(i, i)];
        if d == 0.0 {
            return Err(NumericsError::ZeroPivot { index: i });
        }
        x[i] /= d;
        let xi = x[i];
        for k in 0..i {
            x[k] -= l[(i, k)] * xi;
        }
    }
    Ok(x)
}

/// Solves `S x = z` given the Cholesky root `L` of `S`.
pub fn cholesky_solve(l: &Matrix, z: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let y = solve_lower_triangular(l, z)?;
    solve_lower_transpose(l, &y)
}

/// `log det S` from the Cholesky root of `S`.
pub fn cholesky_log_det(l: &Matrix) -> f64 {
    2.0 * l.diag().iter().map(|d| d.ln()).sum::<f64>()
}

/// Solves `L X = B` column by column.
pub fn solve_lower_triangular_matrix(l: &Matrix, b: &Matrix) -> Result<Matrix, NumericsError> {
    let mut out = Matrix::zeros(b.rows(), b.cols());
    for j in 0..b.cols() {
        let col: Vec<f64> = (0..b.rows()).map(|i| b[(i, j)]).collect();
        let x = solve_lower_triangular(l, &col)?;
        for (i, v) in x.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Least-squares solution of `A x ≈ y` by modified Gram–Schmidt QR.
/// Fails with `RankDeficient` when a column is (numerically) dependent on the previous ones.
pub fn least_squares(a: &Matrix, y: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let (m, p) = (a.rows(), a.cols());
    if y.len() != m || m < p {
        return Err(NumericsError::DimensionMismatch {
            expected: format!("{m} observations, at least {p}"),
            found: format!("{} observations", y.len()),
        });
    }
    let mut q: Vec<Vec<f64>> = (0..p).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();
    let norms: Vec<f64> = q.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut r = Matrix::zeros(p, p);
    for j in 0..p {
        for k in 0..j {
            let proj: f64 = q[k].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
            r[(k, j)] = proj;
            let qk = q[k].clone();
            for (v, u) in q[j].iter_mut().zip(&qk) {
                *v -= proj * u;
            }
        }
        let nrm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(nrm > 1e-10 * norms[j]) {
            return Err(NumericsError::RankDeficient { column: j });
        }
        r[(j, j)] = nrm;
        for v in q[j].iter_mut() {
            *v /= nrm;
        }
    }
    let qty: Vec<f64> = q
        .iter()
        .map(|c| c.iter().zip(y).map(|(a, b)| a * b).sum())
        .collect();
    // R is upper triangular: solve via its transpose (lower).
    solve_lower_transpose(&r.transpose(), &qty)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn stationary_diagonal_cases() {
        assert!(stationary_check(&Matrix::from_diag(&[0.9, 0.5])).unwrap());
        assert!(!stationary_check(&Matrix::from_diag(&[1.0])).unwrap());
        assert!(!stationary_check(&Matrix::from_diag(&[0.2, -1.0])).unwrap());
    }

    #[test]
    fn stationary_nilpotent() {
        // characteristic polynomial λ² = 0, both eigenvalues vanish
        let a = m(&[&[0.0, 2.0], &[0.0, 0.0]]);
        assert!(stationary_check(&a).unwrap());
        assert!(spectral_radius(&a).unwrap() < 1e-12);
    }

    #[test]
    fn stationary_rotation_detects_complex_pair() {
        // eigenvalues 0.6 ± 0.9i, modulus ≈ 1.08
        let a = m(&[&[0.6, -0.9], &[0.9, 0.6]]);
        assert!(!stationary_check(&a).unwrap());
    }

    #[test]
    fn stationary_rejects_non_square() {
        assert!(matches!(
            stationary_check(&Matrix::zeros(2, 3)),
            Err(NumericsError::NotSquare { .. })
        ));
    }

    #[test]
    fn spd_sqrt_examples() {
        assert_eq!(spd_sqrt(&Matrix::identity(3)).unwrap(), Matrix::identity(3));
        assert_eq!(spd_sqrt(&m(&[&[4.0]])).unwrap().to_rows(), vec![vec![2.0]]);
        let s = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let l = spd_sqrt(&s).unwrap();
        assert!(l.is_lower_triangular());
        assert!(l.outer_self().max_abs_diff(&s) <= 1e-12);
    }

    #[test]
    fn spd_sqrt_reports_failing_pivot() {
        let s = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(
            spd_sqrt(&s),
            Err(NumericsError::NotPositiveDefinite { pivot: 1, .. })
        ));
        assert!(matches!(
            spd_sqrt(&m(&[&[1.0, 0.5], &[0.4, 1.0]])),
            Err(NumericsError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn psd_sqrt_handles_rank_deficiency() {
        let s = m(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let l = psd_sqrt(&s, 1e-12).unwrap();
        assert!(l.outer_self().max_abs_diff(&s) < 1e-14);
        assert_eq!(l[(1, 1)], 0.0);
    }

    #[test]
    fn forward_substitution_examples() {
        let x = solve_lower_triangular(&Matrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
        let l = m(&[&[2.0, 0.0], &[1.0, 1.0]]);
        assert_eq!(solve_lower_triangular(&l, &[2.0, 2.0]).unwrap(), vec![1.0, 1.0]);

        let d = 1.0 / 252.0;
        let l = m(&[&[d, 0.0], &[d, d]]);
        let z = [0.3, -0.7];
        let x = solve_lower_triangular(&l, &z).unwrap();
        let back = l.mul_vec(&x);
        assert!((back[0] - z[0]).abs() <= 1e-12 && (back[1] - z[1]).abs() <= 1e-12);
    }

    #[test]
    fn forward_substitution_zero_pivot() {
        let l = m(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!(matches!(
            solve_lower_triangular(&l, &[1.0, 1.0]),
            Err(NumericsError::ZeroPivot { index: 1 })
        ));
    }

    #[test]
    fn cholesky_solve_and_log_det() {
        let s = m(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let l = spd_sqrt(&s).unwrap();
        let x = cholesky_solve(&l, &[1.0, 2.0]).unwrap();
        let back = s.mul_vec(&x);
        assert!((back[0] - 1.0).abs() < 1e-14 && (back[1] - 2.0).abs() < 1e-14);
        assert!((cholesky_log_det(&l) - 8.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn least_squares_exact_fit_and_rank_check() {
        let a = m(&[&[1.0, 1.0], &[1.0, 2.0], &[1.0, 3.0]]);
        let x = least_squares(&a, &[3.0, 5.0, 7.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
        let col = m(&[&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]]);
        assert!(matches!(
            least_squares(&col, &[1.0, 1.0, 1.0]),
            Err(NumericsError::RankDeficient { column: 1 })
        ));
    }

    #[test]
    fn clip_spectrum_lifts_negative_eigenvalue() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let c = clip_spectrum(&a, 0.1).unwrap();
        assert!((min_symmetric_eigenvalue(&c).unwrap() - 0.1).abs() < 1e-12);
        let spd = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        assert!(clip_spectrum(&spd, 1e-3).unwrap().max_abs_diff(&spd) < 1e-14);
    }
}
