//! Yield panels simulated from a constant-parameter Vasiček model.

use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate, Weekday};

use super::{DataError, YieldPanel};
use crate::numerics::{Matrix, RngStream};
use crate::vasicek::{AffineTable, VasicekParams};

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    /// Pricing parameters `(b, β, Σ½)`.
    pub params: VasicekParams,
    /// Real-world `(a, α)`; the pricing drift is used when absent.
    pub real_world: Option<(Vec<f64>, Matrix)>,
    pub x0: Vec<f64>,
    pub tau: Vec<usize>,
    pub dates: usize,
    /// Standard deviation of i.i.d. measurement noise on each yield.
    pub noise_std: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    pub panel: YieldPanel,
    /// Factor value on each date.
    pub factors: Vec<Vec<f64>>,
}

/// Weekdays from 3 January 2000.
pub fn business_days(count: usize) -> Vec<NaiveDate> {
    let mut d = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

pub fn simulate_panel(spec: &SyntheticSpec) -> Result<SyntheticPanel, DataError> {
    let p = &spec.params;
    let n = p.n();
    if spec.x0.len() != n || spec.tau.is_empty() || spec.dates == 0 {
        return Err(DataError::Invalid("synthetic panel needs x0 of length n, tenors and dates".into()));
    }
    let (a, alpha) = match &spec.real_world {
        Some((a, alpha)) if a.len() == n && alpha.rows() == n && alpha.cols() == n => (a.clone(), alpha.clone()),
        Some(_) => return Err(DataError::Invalid("real-world drift has the wrong dimension".into())),
        None => (p.b().to_vec(), p.beta().clone()),
    };
    let max_tau = *spec.tau.iter().max().expect("non-empty");
    let table = AffineTable::new(p, max_tau)?;
    let mut rng = RngStream::new(spec.seed, 0);
    let mut x = spec.x0.clone();
    let mut factors = Vec::with_capacity(spec.dates);
    let mut rows = Vec::with_capacity(spec.dates);
    for t in 0..spec.dates {
        if t > 0 {
            let shock = p.sigma_sqrt().mul_vec(&rng.standard_normal_vec(n));
            let ax = alpha.mul_vec(&x);
            x = (0..n).map(|i| a[i] + ax[i] + shock[i]).collect();
        }
        let row: Vec<f64> = spec
            .tau
            .iter()
            .map(|&l| {
                let y = (-table.a(l) + table.b(l).iter().zip(&x).map(|(b, x)| b * x).sum::<f64>()) / (l as f64 * p.delta());
                y + spec.noise_std * rng.standard_normal()
            })
            .collect();
        factors.push(x.clone());
        rows.push(row);
    }
    let mut metadata = BTreeMap::new();
    metadata.insert("units".to_string(), "decimal".to_string());
    metadata.insert("delta".to_string(), format!("{:?}", p.delta()));
    let yields = rows.into_iter().map(|r| r.into_iter().map(Some).collect()).collect();
    let panel = YieldPanel::new(business_days(spec.dates), spec.tau.clone(), yields, metadata)?;
    Ok(SyntheticPanel { panel, factors })
}
