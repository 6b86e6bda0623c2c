//! Per-window estimates and their CSV layout.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    /// Panel row index of the window end.
    pub t: usize,
    pub b: Vec<f64>,
    pub beta: Matrix,
    pub sigma_sqrt: Matrix,
    pub a: Vec<f64>,
    pub alpha: Matrix,
    pub lambda: Vec<f64>,
    pub big_lambda: Matrix,
    pub loglik: f64,
    /// Filtered factor at the window end.
    pub x_filtered: Vec<f64>,
    pub rcov_objective: f64,
    pub rcov_converged: bool,
    pub mle_converged: bool,
    pub mle_outer_iterations: usize,
}

impl EstimationResult {
    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn sigma(&self) -> Matrix {
        self.sigma_sqrt.outer_self()
    }
}

fn vec_names(prefix: &str, n: usize, out: &mut Vec<String>) {
    out.extend((1..=n).map(|i| format!("{prefix}_{i}")));
}

fn mat_names(prefix: &str, n: usize, out: &mut Vec<String>) {
    for i in 1..=n {
        out.extend((1..=n).map(|j| format!("{prefix}_{i}{j}")));
    }
}

fn push_mat(m: &Matrix, out: &mut Vec<String>) {
    out.extend(m.as_slice().iter().map(|v| v.to_string()));
}

fn push_vec(v: &[f64], out: &mut Vec<String>) {
    out.extend(v.iter().map(|v| v.to_string()));
}

/// One row per window. `dates`, when given, is indexed by panel row and adds a
/// `date` column.
pub fn write_results_csv<W: Write>(out: W, results: &[EstimationResult], dates: Option<&[String]>) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let n = results.first().map_or(0, EstimationResult::n);
    let mut header = vec!["t".to_string()];
    if dates.is_some() {
        header.push("date".into());
    }
    vec_names("b", n, &mut header);
    mat_names("beta", n, &mut header);
    mat_names("sigma_sqrt", n, &mut header);
    vec_names("a", n, &mut header);
    mat_names("alpha", n, &mut header);
    vec_names("lambda", n, &mut header);
    mat_names("Lambda", n, &mut header);
    vec_names("x", n, &mut header);
    header.extend(
        ["loglik", "rcov_objective", "rcov_converged", "mle_converged", "mle_outer_iterations"].map(String::from),
    );
    w.write_record(&header)?;
    for r in results {
        let mut row = vec![r.t.to_string()];
        if let Some(d) = dates {
            row.push(d.get(r.t).cloned().unwrap_or_default());
        }
        push_vec(&r.b, &mut row);
        push_mat(&r.beta, &mut row);
        push_mat(&r.sigma_sqrt, &mut row);
        push_vec(&r.a, &mut row);
        push_mat(&r.alpha, &mut row);
        push_vec(&r.lambda, &mut row);
        push_mat(&r.big_lambda, &mut row);
        push_vec(&r.x_filtered, &mut row);
        row.push(r.loglik.to_string());
        row.push(r.rcov_objective.to_string());
        row.push(r.rcov_converged.to_string());
        row.push(r.mle_converged.to_string());
        row.push(r.mle_outer_iterations.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
