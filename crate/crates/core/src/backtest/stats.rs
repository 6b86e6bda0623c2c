//! Summary statistics, normality and coverage tests for simulated returns.

use serde::{Deserialize, Serialize};

use crate::numerics::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (divisor `n − 1`).
    pub std: f64,
    /// Adjusted Fisher–Pearson skewness `G₁`; 0 for a point mass.
    pub skewness: f64,
    /// Bias-corrected excess kurtosis `G₂`; 0 for a point mass.
    pub excess_kurtosis: f64,
    /// `(level, quantile)` pairs.
    pub quantiles: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSample {
    pub returns: Vec<f64>,
    pub stats: SummaryStats,
}

fn central_moments(x: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    // a constant sample has exactly zero spread
    let mean = if x.iter().all(|&v| v == x[0]) { x[0] } else { x.iter().sum::<f64>() / n };
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (mean, m2 / n, m3 / n, m4 / n)
}

/// Linear interpolation between order statistics (`(n−1)p` rule) on sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn excess_kurtosis(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (_, m2, _, m4) = central_moments(x);
    if m2 == 0.0 || x.len() < 4 {
        return 0.0;
    }
    let g2 = m4 / (m2 * m2) - 3.0;
    ((n + 1.0) * g2 + 6.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0))
}

pub fn summarize(x: &[f64], levels: &[f64]) -> SummaryStats {
    assert!(x.len() >= 2, "need at least two observations");
    let n = x.len() as f64;
    let (mean, m2, m3, _) = central_moments(x);
    let skewness = if m2 == 0.0 {
        0.0
    } else {
        let g1 = m3 / m2.powf(1.5);
        if x.len() > 2 {
            g1 * (n * (n - 1.0)).sqrt() / (n - 2.0)
        } else {
            g1
        }
    };
    let s = sorted(x);
    SummaryStats {
        n: x.len(),
        mean,
        std: (m2 * n / (n - 1.0)).sqrt(),
        skewness,
        excess_kurtosis: excess_kurtosis(x),
        quantiles: levels.iter().map(|&p| (p, quantile_sorted(&s, p))).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JarqueBera {
    pub statistic: f64,
    /// χ² tail with two degrees of freedom, `exp(−JB/2)`.
    pub p_value: f64,
}

pub fn jarque_bera(x: &[f64]) -> JarqueBera {
    let n = x.len() as f64;
    let (_, m2, m3, m4) = central_moments(x);
    if m2 == 0.0 {
        return JarqueBera {
            statistic: f64::INFINITY,
            p_value: 0.0,
        };
    }
    let s = m3 / m2.powf(1.5);
    let k = m4 / (m2 * m2) - 3.0;
    let statistic = n / 6.0 * (s * s + 0.25 * k * k);
    JarqueBera {
        statistic,
        p_value: (-0.5 * statistic).exp(),
    }
}

/// Percentile bootstrap interval of `stat` at confidence `level`.
pub fn bootstrap_ci<F: Fn(&[f64]) -> f64>(x: &[f64], stat: F, resamples: usize, level: f64, rng: &mut RngStream) -> (f64, f64) {
    assert!(resamples >= 2 && !x.is_empty());
    let mut buf = vec![0.0; x.len()];
    let mut values: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = x[rng.index(x.len())];
            }
            stat(&buf)
        })
        .collect();
    values.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    (quantile_sorted(&values, tail), quantile_sorted(&values, 1.0 - tail))
}

/// `P(Bin(n, p) ≥ k)` by exact summation of the upper tail.
pub fn binomial_tail(n: usize, k: usize, p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "probability out of range");
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    // pmf(k) from logs, then the upward recurrence
    let ln_choose: f64 = (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum();
    let mut pmf = (ln_choose + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp();
    let ratio = p / (1.0 - p);
    let mut tail = 0.0;
    for i in k..=n {
        tail += pmf;
        if i < n {
            pmf *= (n - i) as f64 / (i + 1) as f64 * ratio;
        }
    }
    tail.min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub periods: usize,
    pub exceedances: usize,
    /// Probability of one period falling outside the band under the model.
    pub exceedance_probability: f64,
    /// One-sided `P(Bin(periods, 1 − level) ≥ exceedances)`.
    pub p_value: f64,
}

/// Counts realized returns outside their `(lower, upper)` band; `level` is
/// the nominal coverage of each band. `thin` keeps every second period.
pub fn coverage_test(bands: &[(f64, f64)], realized: &[f64], level: f64, thin: bool) -> CoverageReport {
    assert_eq!(bands.len(), realized.len(), "one band per realized return");
    assert!(level > 0.0 && level < 1.0, "coverage level must lie in (0, 1)");
    let keep = |i: &usize| !thin || i % 2 == 0;
    let (mut periods, mut exceedances) = (0, 0);
    for i in (0..bands.len()).filter(keep) {
        periods += 1;
        let (lo, hi) = bands[i];
        if realized[i] < lo || realized[i] > hi {
            exceedances += 1;
        }
    }
    let q = 1.0 - level;
    CoverageReport {
        periods,
        exceedances,
        exceedance_probability: q,
        p_value: binomial_tail(periods, exceedances, q),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial_tail(20, 0, 0.05), 1.0);
        let p: f64 = 1.0 - (0..3).map(|i| {
            let c = [1.0, 20.0, 190.0][i];
            c * 0.05f64.powi(i as i32) * 0.95f64.powi(20 - i as i32)
        }).sum::<f64>();
        assert!((binomial_tail(20, 3, 0.05) - p).abs() < 1e-14);
        assert!((binomial_tail(20, 3, 0.05) - 0.0755).abs() < 1e-4);
        assert!((binomial_tail(20, 20, 0.05) - 0.05f64.powi(20)).abs() < 1e-12 * 0.05f64.powi(20));
    }

    #[test]
    fn quantiles_interpolate() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
        assert!((quantile_sorted(&s, 0.5) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn point_mass_stats() {
        let s = summarize(&[0.2; 10], &[0.05, 0.95]);
        assert_eq!(s.std, 0.0);
        assert_eq!(s.skewness, 0.0);
        assert_eq!(s.quantiles, vec![(0.05, 0.2), (0.95, 0.2)]);
    }

    #[test]
    fn gaussian_sample_passes_normality() {
        let mut rng = RngStream::new(1, 0);
        let x = rng.standard_normal_vec(10_000);
        assert!(jarque_bera(&x).p_value > 0.01);
        let s = summarize(&x, &[]);
        assert!(s.excess_kurtosis.abs() < 0.2);
    }

    #[test]
    fn heavy_tails_detected() {
        let mut rng = RngStream::new(2, 0);
        // scale mixture of normals
        let x: Vec<f64> = (0..5000)
            .map(|_| {
                let s = if rng.uniform() < 0.1 { 4.0 } else { 1.0 };
                s * rng.standard_normal()
            })
            .collect();
        assert!(jarque_bera(&x).p_value < 1e-6);
        let (lo, _) = bootstrap_ci(&x, excess_kurtosis, 500, 0.95, &mut RngStream::new(3, 0));
        assert!(lo > 0.0);
    }

    #[test]
    fn coverage_counts_and_thinning() {
        let bands = vec![(-1.0, 1.0); 6];
        let realized = [0.0, 2.0, 0.5, -3.0, 1.5, 0.0];
        let r = coverage_test(&bands, &realized, 0.95, false);
        assert_eq!((r.periods, r.exceedances), (6, 3));
        let t = coverage_test(&bands, &realized, 0.95, true);
        assert_eq!((t.periods, t.exceedances), (3, 1));
        assert!((r.p_value - binomial_tail(6, 3, 0.05)).abs() < 1e-15);
    }
}
