mod common;

use proptest::prelude::*;
use vasicek_crc::numerics::{
    nelder_mead, norm_inf, solve_lower_triangular, spd_sqrt, Matrix, NelderMeadOptions, RngStream,
};

fn random_spd(rng: &mut RngStream, n: usize) -> Matrix {
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = rng.standard_normal();
        }
    }
    let mut s = &(&g * &g.transpose()) + &Matrix::identity(n).scale(0.1 * n as f64);
    s.symmetrize();
    s
}

fn random_lower(rng: &mut RngStream, n: usize) -> Matrix {
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        l[(i, i)] = 1.0 + rng.uniform();
        for j in 0..i {
            // row sums below the diagonal stay small next to the pivot
            l[(i, j)] = (rng.uniform() - 0.5) / n as f64;
        }
    }
    l
}

fn residual_ok(l: &Matrix, z: &[f64]) -> bool {
    let x = solve_lower_triangular(l, z).unwrap();
    let r: Vec<f64> = l.mul_vec(&x).iter().zip(z).map(|(a, b)| a - b).collect();
    norm_inf(&r) <= 1e-12 * l.norm_inf() * norm_inf(&x)
}

proptest! {
    #![proptest_config(common::cases(256))]

    #[test]
    fn spd_sqrt_reconstructs(seed in any::<u64>(), n in 1usize..=8) {
        let s = random_spd(&mut RngStream::new(seed, 0), n);
        let l = spd_sqrt(&s).unwrap();
        prop_assert!(l.is_lower_triangular());
        let back = &l * &l.transpose();
        prop_assert!(back.max_abs_diff(&s) <= 1e-10 * s.max_abs());
    }

    #[test]
    fn forward_substitution_residual(seed in any::<u64>(), n in 1usize..=200) {
        let mut rng = RngStream::new(seed, 0);
        let l = random_lower(&mut rng, n);
        let z = rng.standard_normal_vec(n);
        prop_assert!(residual_ok(&l, &z));
    }

    #[test]
    fn rng_streams_reproduce(seed in any::<u64>(), stream in any::<u64>()) {
        let mut a = RngStream::new(seed, stream);
        let mut b = RngStream::new(seed, stream);
        for _ in 0..64 {
            prop_assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
            prop_assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }

    #[test]
    fn nelder_mead_is_deterministic(c in prop::collection::vec(-3.0f64..3.0, 1..5)) {
        let f = |x: &[f64]| x.iter().zip(&c).map(|(x, c)| (x - c).powi(2) * (1.0 + c.abs())).sum::<f64>();
        let opts = NelderMeadOptions::default();
        let x0 = vec![0.0; c.len()];
        let r1 = nelder_mead(f, &x0, &opts).unwrap();
        let r2 = nelder_mead(f, &x0, &opts).unwrap();
        prop_assert_eq!(r1.argmin, r2.argmin);
        prop_assert_eq!(r1.evaluations, r2.evaluations);
    }
}

#[test]
fn forward_substitution_residual_at_3000() {
    let mut rng = RngStream::new(99, 0);
    let l = random_lower(&mut rng, 3000);
    let z = rng.standard_normal_vec(3000);
    assert!(residual_ok(&l, &z));
}
