//! Nelder–Mead simplex minimizer.

use serde::{Deserialize, Serialize};

use super::NumericsError;

const REFLECTION: f64 = 1.0;
const EXPANSION: f64 = 2.0;
const CONTRACTION: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NelderMeadOptions {
    /// Simplex diameter (sup-norm, measured from the best vertex) required for convergence.
    pub tol_x: f64,
    /// Spread of objective values over the simplex required for convergence.
    pub tol_f: f64,
    pub max_iter: usize,
    /// Edge length of the initial axis-aligned simplex. `None` uses 5% of each
    /// coordinate, or 0.00025 for zero coordinates.
    pub initial_step: Option<f64>,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            tol_x: 1e-8,
            tol_f: 1e-10,
            max_iter: 20_000,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub argmin: Vec<f64>,
    pub min_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// False when `max_iter` was hit before both tolerances were met.
    pub converged: bool,
}

struct Evaluator<F> {
    f: F,
    count: usize,
}

impl<F: FnMut(&[f64]) -> f64> Evaluator<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64, NumericsError> {
        self.count += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            return Err(NumericsError::ObjectiveNan { point: x.to_vec() });
        }
        Ok(v)
    }
}

fn towards(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

/// Minimizes `objective` starting from `x0`. Deterministic for fixed inputs.
pub fn nelder_mead<F>(
    objective: F,
    x0: &[f64],
    options: &NelderMeadOptions,
) -> Result<NelderMeadResult, NumericsError>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut ev = Evaluator { f: objective, count: 0 };
    let f0 = ev.eval(x0)?;
    if !f0.is_finite() {
        return Err(NumericsError::NonFinite {
            what: "objective at starting point".into(),
        });
    }
    if n == 0 {
        return Ok(NelderMeadResult {
            argmin: Vec::new(),
            min_value: f0,
            iterations: 0,
            evaluations: 1,
            converged: true,
        });
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        let step = match options.initial_step {
            Some(s) => s,
            None if x0[i] != 0.0 => 0.05 * x0[i],
            None => 0.00025,
        };
        x[i] += step;
        let fx = ev.eval(&x)?;
        simplex.push((x, fx));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| super::matrix::max_abs_diff(x, &best.0))
            .fold(0.0, f64::max);
        let spread = simplex[n].1 - simplex[0].1;
        // Both tests must pass: a spread test alone stops early whenever two
        // vertices straddle the minimum with equal values.
        if diameter < options.tol_x && spread < options.tol_f {
            converged = true;
            break;
        }
        if iterations >= options.max_iter {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let (worst_x, worst_f) = simplex[n].clone();
        let second_worst_f = simplex[n - 1].1;
        let best_f = simplex[0].1;

        let xr = towards(&centroid, &worst_x, -REFLECTION);
        let fr = ev.eval(&xr)?;

        if fr < best_f {
            let xe = towards(&centroid, &worst_x, -REFLECTION * EXPANSION);
            let fe = ev.eval(&xe)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < second_worst_f {
            simplex[n] = (xr, fr);
            continue;
        }
        if fr < worst_f {
            let xc = towards(&centroid, &xr, CONTRACTION);
            let fc = ev.eval(&xc)?;
            if fc <= fr {
                simplex[n] = (xc, fc);
                continue;
            }
        } else {
            let xcc = towards(&centroid, &worst_x, CONTRACTION);
            let fcc = ev.eval(&xcc)?;
            if fcc < worst_f {
                simplex[n] = (xcc, fcc);
                continue;
            }
        }
        let best_x = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = towards(&best_x, &vertex.0, SHRINK);
            let fx = ev.eval(&x)?;
            *vertex = (x, fx);
        }
    }

    let (argmin, min_value) = simplex.swap_remove(0);
    Ok(NelderMeadResult {
        argmin,
        min_value,
        iterations,
        evaluations: ev.count,
        converged,
    })
}
