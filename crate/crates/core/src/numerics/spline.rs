//! Natural cubic spline with flat extrapolation.

use super::NumericsError;

#[derive(Debug, Clone, PartialEq)]
pub struct NaturalCubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots; zero at both ends.
    second: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(knots: &[f64], values: &[f64]) -> Result<Self, NumericsError> {
        if knots.len() != values.len() {
            return Err(NumericsError::DimensionMismatch {
                expected: format!("{} values", knots.len()),
                found: format!("{} values", values.len()),
            });
        }
        if knots.len() < 2 {
            return Err(NumericsError::TooFewKnots { found: knots.len() });
        }
        super::matrix::check_finite(knots, "knots")?;
        super::matrix::check_finite(values, "values")?;
        if let Some(i) = knots.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(NumericsError::KnotsNotIncreasing { index: i + 1 });
        }

        let n = knots.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations
            //   h_{i-1} M_{i-1} + 2(h_{i-1}+h_i) M_i + h_i M_{i+1} = 6 (s_i - s_{i-1})
            let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
            let slope: Vec<f64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / h[i]).collect();
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for k in 0..m {
                diag[k] = 2.0 * (h[k] + h[k + 1]);
                rhs[k] = 6.0 * (slope[k + 1] - slope[k]);
            }
            for k in 1..m {
                let w = h[k] / diag[k - 1];
                diag[k] -= w * h[k];
                rhs[k] -= w * rhs[k - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for k in (0..m - 1).rev() {
                second[k + 1] = (rhs[k] - h[k + 1] * second[k + 2]) / diag[k];
            }
        }
        Ok(Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            second,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Evaluates the interpolant; outside `[first knot, last knot]` the nearest end value is returned.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= self.knots[0] {
            return self.values[0];
        }
        if x >= self.knots[n - 1] {
            return self.values[n - 1];
        }
        // first knot strictly greater than x
        let hi = self.knots.partition_point(|&k| k <= x);
        let lo = hi - 1;
        if x == self.knots[lo] {
            return self.values[lo];
        }
        let h = self.knots[hi] - self.knots[lo];
        let a = (self.knots[hi] - x) / h;
        let b = (x - self.knots[lo]) / h;
        a * self.values[lo]
            + b * self.values[hi]
            + ((a * a * a - a) * self.second[lo] + (b * b * b - b) * self.second[hi]) * h * h / 6.0
    }
}

pub fn natural_cubic_spline(knots: &[f64], values: &[f64]) -> Result<NaturalCubicSpline, NumericsError> {
    NaturalCubicSpline::new(knots, values)
}
