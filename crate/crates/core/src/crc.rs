//! Consistent re-calibration of the Hull–White extended Vasiček model.
//!
//! Each step evolves the factor under the current parameters, prices the
//! new curve with the current extension, then swaps in the next parameters
//! and re-calibrates `θ` so the curve is left unchanged. The HJM form of the
//! step produces the same curve directly from the previous one.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::curve::YieldCurve;
use crate::error::ModelError;
use crate::hull_white::{self, HullWhiteExtension};
use crate::numerics::{self, Matrix};
use crate::vasicek::{AffineTable, VasicekParams};

/// Girsanov shift `ε = λ + Λx + ε*` between the pricing and real-world measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketPriceOfRisk {
    pub lambda: Vec<f64>,
    pub big_lambda: Matrix,
}

impl MarketPriceOfRisk {
    pub fn zero(n: usize) -> Self {
        Self {
            lambda: vec![0.0; n],
            big_lambda: Matrix::zeros(n, n),
        }
    }

    pub fn new(lambda: Vec<f64>, big_lambda: Matrix) -> Result<Self, ModelError> {
        let n = lambda.len();
        if big_lambda.rows() != n || big_lambda.cols() != n {
            return Err(ModelError::Dimension {
                what: "market price of risk",
                expected: n,
                found: big_lambda.rows(),
            });
        }
        numerics::check_finite(&lambda, "lambda")?;
        Ok(Self { lambda, big_lambda })
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// `λ + Λx`.
    pub fn shift(&self, x: &[f64]) -> Vec<f64> {
        numerics::add(&self.lambda, &self.big_lambda.mul_vec(x))
    }

    /// Real-world mean reversion `α = β − Σ½Λ`.
    pub fn alpha(&self, params: &VasicekParams) -> Matrix {
        params.beta() - &(params.sigma_sqrt() * &self.big_lambda)
    }

    fn check_alpha(&self, params: &VasicekParams) -> Result<(), ModelError> {
        if self.n() != params.n() {
            return Err(ModelError::Dimension {
                what: "market price of risk",
                expected: params.n(),
                found: self.n(),
            });
        }
        if !numerics::stationary_check(&self.alpha(params))? {
            return Err(ModelError::NonStationary { what: "alpha" });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterUpdate {
    pub params: VasicekParams,
    /// Replaces the state's market price of risk from the next step on.
    pub market_price: Option<MarketPriceOfRisk>,
}

impl ParameterUpdate {
    pub fn new(params: VasicekParams) -> Self {
        Self {
            params,
            market_price: None,
        }
    }

    pub fn with_market_price(params: VasicekParams, mpr: MarketPriceOfRisk) -> Self {
        Self {
            params,
            market_price: Some(mpr),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrcState {
    pub k: usize,
    pub x: Vec<f64>,
    pub params: VasicekParams,
    /// `θ⁽ᵏ⁾` calibrated to the curve extended by one lag (length `M`);
    /// `None` after an HJM step, where the extension is never needed.
    pub hwx: Option<HullWhiteExtension>,
    pub curve: YieldCurve,
    pub market_price: MarketPriceOfRisk,
}

impl CrcState {
    pub fn m(&self) -> usize {
        self.curve.len()
    }

    pub fn spot_rate(&self) -> f64 {
        self.x.iter().sum()
    }

    /// Sets `(λ(k), Λ(k))`; `α(k)` must be stationary.
    pub fn with_market_price(mut self, mpr: MarketPriceOfRisk) -> Result<Self, ModelError> {
        mpr.check_alpha(&self.params)?;
        self.market_price = mpr;
        Ok(self)
    }

    /// `θ⁽ᵏ⁾`, computing it if the state came out of an HJM step.
    pub fn theta(&self) -> Result<HullWhiteExtension, ModelError> {
        match &self.hwx {
            Some(h) => Ok(h.clone()),
            None => calibrate_extended(&self.params, self.k, &self.x, &self.curve),
        }
    }

    /// `θ⁽ᵏ⁾(1)` from the lag-2 yield without solving the full system.
    pub fn theta_first(&self) -> f64 {
        match &self.hwx {
            Some(h) => h.values()[0],
            None => hull_white::theta_first_component(&self.params, &self.x, self.curve.at(2)),
        }
    }
}

/// The one place that decides how the curve continues past lag `M`: the
/// last yield is held flat.
pub fn extrapolate_curve(curve: &YieldCurve, extra: usize) -> YieldCurve {
    let mut v = curve.values().to_vec();
    let last = *v.last().expect("curves are non-empty");
    v.extend(std::iter::repeat_n(last, extra));
    YieldCurve::new(v).expect("finite")
}

fn calibrate_extended(
    params: &VasicekParams,
    k: usize,
    x: &[f64],
    curve: &YieldCurve,
) -> Result<HullWhiteExtension, ModelError> {
    hull_white::calibrate_theta(params, k, x, &extrapolate_curve(curve, 1))
}

/// Rounding allowance for `1'x = y(1)`, scaled by the factor entries since
/// large offsetting components lose digits in the sum.
fn spot_tolerance(y1: f64, x: &[f64]) -> f64 {
    let size: f64 = x.iter().map(|v| v.abs()).sum();
    1e-12 * y1.abs().max(size).max(1e-2)
}

pub fn crc_init(params: VasicekParams, x0: Vec<f64>, observed: YieldCurve) -> Result<CrcState, ModelError> {
    if x0.len() != params.n() {
        return Err(ModelError::Dimension {
            what: "factor state",
            expected: params.n(),
            found: x0.len(),
        });
    }
    if observed.len() < 2 {
        return Err(ModelError::CurveTooShort(observed.len()));
    }
    let spot: f64 = x0.iter().sum();
    if (spot - observed.at(1)).abs() > spot_tolerance(observed.at(1), &x0) {
        return Err(ModelError::SpotMismatch {
            curve: observed.at(1),
            factor: spot,
        });
    }
    let hwx = calibrate_extended(&params, 0, &x0, &observed)?;
    let n = params.n();
    Ok(CrcState {
        k: 0,
        x: x0,
        params,
        hwx: Some(hwx),
        curve: observed,
        market_price: MarketPriceOfRisk::zero(n),
    })
}

fn check_innovation(state: &CrcState, eps: &[f64]) -> Result<(), ModelError> {
    if eps.len() != state.params.n() {
        return Err(ModelError::Dimension {
            what: "innovation",
            expected: state.params.n(),
            found: eps.len(),
        });
    }
    numerics::check_finite(eps, "innovation")?;
    Ok(())
}

fn check_update(state: &CrcState, update: &ParameterUpdate) -> Result<(), ModelError> {
    if update.params.n() != state.params.n() {
        return Err(ModelError::Dimension {
            what: "parameter update",
            expected: state.params.n(),
            found: update.params.n(),
        });
    }
    Ok(())
}

fn next_market_price(state: &CrcState, update: &ParameterUpdate) -> MarketPriceOfRisk {
    update
        .market_price
        .clone()
        .unwrap_or_else(|| state.market_price.clone())
}

/// Steps (ii) and (iii) of the algorithm, with the curve priced from the
/// extended affine coefficients and `θ⁽ᵏ⁺¹⁾` re-solved under the new parameters.
pub fn crc_step_explicit(state: &CrcState, update: &ParameterUpdate, eps_star: &[f64]) -> Result<CrcState, ModelError> {
    check_innovation(state, eps_star)?;
    check_update(state, update)?;
    let p = &state.params;
    let m = state.m();
    let theta = state.theta()?;
    let mut x = p.beta().mul_vec(&state.x);
    let shock = p.sigma_sqrt().mul_vec(eps_star);
    for i in 0..x.len() {
        x[i] += p.b()[i] + shock[i];
    }
    x[0] += theta.values()[0];

    let table = AffineTable::new(p, m)?;
    let curve = hull_white::extended_curve_from_table(&table, p.delta(), &theta, 1, &x, m)?;
    let hwx = calibrate_extended(&update.params, state.k + 1, &x, &curve)?;

    #[cfg(debug_assertions)]
    {
        let new_table = AffineTable::new(&update.params, m)?;
        let again = hull_white::extended_curve_from_table(&new_table, update.params.delta(), &hwx, 0, &x, m)?;
        let scale = numerics::norm_inf(curve.values()).max(1e-2);
        debug_assert!(
            again.max_abs_diff(&curve) <= 1e-9 * scale,
            "re-calibration moved the curve by {:e}",
            again.max_abs_diff(&curve)
        );
    }

    Ok(CrcState {
        k: state.k + 1,
        x,
        params: update.params.clone(),
        hwx: Some(hwx),
        curve,
        market_price: next_market_price(state, update),
    })
}

/// Shared HJM kernel: `shock = Σ½(k)ε*(k+1)`.
fn hjm_advance(state: &CrcState, shock: &[f64]) -> Result<(Vec<f64>, YieldCurve), ModelError> {
    let p = &state.params;
    let m = state.m();
    if m < 2 {
        return Err(ModelError::CurveTooShort(m));
    }
    let theta1 = state.theta_first();
    let mut x = p.beta().mul_vec(&state.x);
    for i in 0..x.len() {
        x[i] += p.b()[i] + shock[i];
    }
    x[0] += theta1;

    let delta = p.delta();
    let ext = extrapolate_curve(&state.curve, 1);
    let spot_carry = ext.at(1) * delta;
    let table = AffineTable::new(p, m)?;
    let mut y = Vec::with_capacity(m);
    y.push(x.iter().sum());
    for j in 2..=m {
        let b = table.b(j);
        let log_price = ext.at(j + 1) * (j + 1) as f64 * delta - spot_carry
            + 0.5 * p.sigma_quad(b)
            + numerics::dot(b, shock);
        y.push(log_price / (j as f64 * delta));
    }
    Ok((x, YieldCurve::new(y)?))
}

/// Curve update directly from the previous curve; `θ⁽ᵏ⁺¹⁾` is left absent.
pub fn crc_step_hjm(state: &CrcState, update: &ParameterUpdate, eps_star: &[f64]) -> Result<CrcState, ModelError> {
    check_innovation(state, eps_star)?;
    check_update(state, update)?;
    let shock = state.params.sigma_sqrt().mul_vec(eps_star);
    let (x, curve) = hjm_advance(state, &shock)?;
    Ok(CrcState {
        k: state.k + 1,
        x,
        params: update.params.clone(),
        hwx: None,
        curve,
        market_price: next_market_price(state, update),
    })
}

/// Real-world step driven by `ε(k+1)`, using the state's `(λ(k), Λ(k))`. The
/// market-price drift `−B'Σ½(λ + Λx)` enters through `ε* = ε − λ − Λx`.
pub fn crc_step_real_world(state: &CrcState, update: &ParameterUpdate, eps: &[f64]) -> Result<CrcState, ModelError> {
    check_innovation(state, eps)?;
    check_update(state, update)?;
    state.market_price.check_alpha(&state.params)?;
    let eps_star = numerics::sub(eps, &state.market_price.shift(&state.x));
    let shock = state.params.sigma_sqrt().mul_vec(&eps_star);
    let (x, curve) = hjm_advance(state, &shock)?;
    if let Some(next) = &update.market_price {
        next.check_alpha(&update.params)?;
    }
    Ok(CrcState {
        k: state.k + 1,
        x,
        params: update.params.clone(),
        hwx: None,
        curve,
        market_price: next_market_price(state, update),
    })
}

/// `log ξ(s)` for `s = 0..=k`, where `k = eps_star.len()`.
pub fn log_density_path(
    factors: &[Vec<f64>],
    market_price: &[MarketPriceOfRisk],
    eps_star: &[Vec<f64>],
) -> Result<Vec<f64>, ModelError> {
    let k = eps_star.len();
    if market_price.len() != k || factors.len() < k {
        return Err(ModelError::PathLength(format!(
            "{} factors, {} market prices, {} innovations",
            factors.len(),
            market_price.len(),
            k
        )));
    }
    let mut out = Vec::with_capacity(k + 1);
    let mut acc = 0.0;
    out.push(acc);
    for s in 0..k {
        let shift = market_price[s].shift(&factors[s]);
        acc += -0.5 * numerics::dot(&shift, &shift) + numerics::dot(&shift, &eps_star[s]);
        out.push(acc);
    }
    Ok(out)
}

/// Density `ξ(k)` of the real-world measure with respect to the pricing
/// measure on `F(k)`.
pub fn density_process(
    factors: &[Vec<f64>],
    market_price: &[MarketPriceOfRisk],
    eps_star: &[Vec<f64>],
) -> Result<f64, ModelError> {
    let path = log_density_path(factors, market_price, eps_star)?;
    Ok(path.last().copied().unwrap_or(0.0).exp())
}

/// One row per state: `k, x_1..x_n, y_1..y_M`.
pub fn write_snapshots<W: Write>(out: W, states: &[CrcState]) -> Result<(), std::io::Error> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = states.first() {
        let mut header = vec!["k".to_string()];
        header.extend((1..=first.x.len()).map(|i| format!("x_{i}")));
        header.extend((1..=first.m()).map(|l| format!("y_{l}")));
        w.write_record(&header)?;
    }
    for s in states {
        let mut row = vec![s.k.to_string()];
        row.extend(s.x.iter().map(|v| v.to_string()));
        row.extend(s.curve.values().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()
}
