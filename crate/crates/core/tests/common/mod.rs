#![allow(dead_code)]

use vasicek_crc::numerics::{stationary_check, Matrix, RngStream};
use vasicek_crc::{VasicekParams, YieldCurve};

pub const DELTA: f64 = 1.0 / 252.0;

/// Stationary `β` with random full structure, lower-triangular `Σ½` with
/// daily-scale volatilities and a small drift.
pub fn random_params(rng: &mut RngStream, n: usize) -> VasicekParams {
    let beta = loop {
        let mut rows = vec![vec![0.0; n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if i == j { 0.5 + 0.49 * rng.uniform() } else { 0.1 * (rng.uniform() - 0.5) };
            }
        }
        let b = Matrix::from_rows(&rows).unwrap();
        if stationary_check(&b).unwrap() {
            break b;
        }
    };
    let mut s = Matrix::zeros(n, n);
    for i in 0..n {
        s[(i, i)] = 2e-4 + 1e-3 * rng.uniform();
        for j in 0..i {
            s[(i, j)] = 4e-4 * (rng.uniform() - 0.5);
        }
    }
    let b: Vec<f64> = (0..n).map(|_| 2e-4 * (rng.uniform() - 0.5)).collect();
    VasicekParams::new(b, beta, s, DELTA).unwrap()
}

pub fn random_state(rng: &mut RngStream, n: usize) -> Vec<f64> {
    (0..n).map(|_| 0.01 + 0.02 * rng.uniform()).collect()
}

/// Smooth upward-sloping curve starting at `spot`.
pub fn humped_curve(spot: f64, m: usize) -> YieldCurve {
    YieldCurve::new(
        (1..=m)
            .map(|l| {
                let t = (l - 1) as f64 / 252.0;
                spot + 0.01 * (1.0 - (-t / 2.0).exp()) + 0.004 * t * (-t).exp()
            })
            .collect(),
    )
    .unwrap()
}

pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        failure_persistence: None,
        ..Default::default()
    }
}
