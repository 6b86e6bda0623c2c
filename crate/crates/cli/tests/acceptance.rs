//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines always
//! reach standard output.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use vasicek_crc::backtest::{
    binomial_tail, bootstrap_ci, excess_kurtosis, jarque_bera, simulate_portfolio_returns, Measure, ParameterProcess,
    PortfolioSpec,
};
use vasicek_crc::crc::{crc_init, crc_step_explicit, crc_step_hjm, density_process, MarketPriceOfRisk, ParameterUpdate};
use nalgebra::DMatrix;
use vasicek_crc::data::{panel_on_grid, simulate_panel, SyntheticSpec};
use vasicek_crc::estimation::{
    compose_grid, cross_section_factor, fit_beta_sigma_rcov, fit_drift_mle, infer_market_price, kalman_filter,
    model_rcov, real_world_transition, realized_cov_matrix, rescale_grid, DriftStart, KalmanOptions, MleOptions,
    RcovOptions, StateSpaceSpec, Weights,
};
use vasicek_crc::hull_white::{calibrate_theta, extended_yield_curve};
use vasicek_crc::numerics::{stationary_check, Matrix, RngStream};
use vasicek_crc::stochvol::{fit_stochvol, stochvol_step, StochVolParams};
use vasicek_crc::vasicek::{factor_step, yield_curve, zcb_price, FactorState};
use vasicek_crc::{VasicekParams, YieldCurve};

const DELTA: f64 = 1.0 / 252.0;

type Outcome = Result<String, String>;

fn random_params(rng: &mut RngStream, n: usize) -> VasicekParams {
    let beta = loop {
        let mut b = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] = if i == j { 0.5 + 0.49 * rng.uniform() } else { 0.1 * (rng.uniform() - 0.5) };
            }
        }
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
    let b = (0..n).map(|_| 2e-4 * (rng.uniform() - 0.5)).collect();
    VasicekParams::new(b, beta, s, DELTA).unwrap()
}

fn random_state(rng: &mut RngStream, n: usize) -> Vec<f64> {
    (0..n).map(|_| 0.01 + 0.02 * rng.uniform()).collect()
}

/// Smooth curve through `spot` at lag 1 with a level-dependent hump.
fn target_curve(rng: &mut RngStream, spot: f64, m: usize) -> YieldCurve {
    let (slope, hump) = (0.02 * rng.uniform(), 0.01 * (rng.uniform() - 0.5));
    YieldCurve::new(
        (1..=m)
            .map(|l| {
                let t = (l - 1) as f64 / 252.0;
                spot + slope * (1.0 - (-t / 2.0).exp()) + hump * t * (-t).exp()
            })
            .collect(),
    )
    .unwrap()
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs()).fold(0.0, f64::max)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn affine_prices() -> Outcome {
    let (cases, paths) = (100, 1_000_000);
    let mut rng = RngStream::new(101, 0);
    let mut hits = 0;
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let n = case % 3 + 1;
        let p = random_params(&mut rng, n);
        let x0 = random_state(&mut rng, n);
        let lag = 2 + rng.index(9);
        let exact = zcb_price(&p, &x0, lag).unwrap();
        // the discount factor along the frozen path centres the accumulators
        let centre = (-DELTA * lag as f64 * x0.iter().sum::<f64>()).exp();
        let mut mc = RngStream::new(102, case as u64);
        let (mut s1, mut s2) = (0.0, 0.0);
        let mut eps = vec![0.0; n];
        for _ in 0..paths {
            let mut x = x0.clone();
            let mut log_d = -DELTA * x.iter().sum::<f64>();
            for _ in 1..lag {
                mc.fill_standard_normal(&mut eps);
                x = factor_step(&p, &x, &eps);
                log_d -= DELTA * x.iter().sum::<f64>();
            }
            let d = log_d.exp() - centre;
            s1 += d;
            s2 += d * d;
        }
        let k = paths as f64;
        let mean = s1 / k;
        let se = ((s2 / k - mean * mean) / (k - 1.0)).sqrt();
        let z = (centre + mean - exact).abs() / se;
        worst = worst.max(z);
        if z <= 3.0 {
            hits += 1;
        }
    }
    let msg = format!("{hits}/{cases} cases within 3 SE at {paths} paths (largest deviation {worst:.2} SE)");
    if hits >= 95 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn calibration_round_trip() -> Outcome {
    let mut rng = RngStream::new(201, 0);
    let (mut worst, mut worst_theta): (f64, f64) = (0.0, 0.0);
    for m in [120, 1080] {
        for n in [1, 3] {
            for _ in 0..50 {
                let p = random_params(&mut rng, n);
                let x = random_state(&mut rng, n);
                let target = target_curve(&mut rng, x.iter().sum(), m);
                let hwx = calibrate_theta(&p, 0, &x, &target).unwrap();
                let state = FactorState::new(x.clone(), 0).unwrap();
                let back = extended_yield_curve(&p, &hwx, &state, m).unwrap();
                worst = worst.max(max_rel_diff(back.values(), target.values()));
                let own = yield_curve(&p, &state, m).unwrap();
                worst_theta = worst_theta.max(max_abs(calibrate_theta(&p, 0, &x, &own).unwrap().values()));
            }
        }
    }
    let msg = format!("largest relative re-pricing error {worst:.2e}, largest own-curve |theta| {worst_theta:.2e}");
    if worst <= 1e-10 && worst_theta <= 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn hjm_equivalence() -> Outcome {
    let (n, m, steps) = (3, 120, 1000);
    let mut rng = RngStream::new(301, 0);
    let p0 = random_params(&mut rng, n);
    let x0 = random_state(&mut rng, n);
    let mut explicit = crc_init(p0, x0.clone(), target_curve(&mut rng, x0.iter().sum(), m)).unwrap();
    let mut hjm = explicit.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let update = ParameterUpdate::new(random_params(&mut rng, n));
        let eps = rng.standard_normal_vec(n);
        explicit = crc_step_explicit(&explicit, &update, &eps).unwrap();
        hjm = crc_step_hjm(&hjm, &update, &eps).unwrap();
        worst = worst.max(explicit.curve.max_abs_diff(&hjm.curve));
    }
    let msg = format!("sup-norm curve discrepancy {worst:.2e} over {steps} steps");
    if worst <= 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Mean and variance of one entry of a Gaussian vector given some others,
/// by direct conditioning with a dense inverse.
fn condition(mean: &[f64], cov: &DMatrix<f64>, observed: &[usize], values: &[f64], target: usize) -> (f64, f64) {
    let k = observed.len();
    let syy = DMatrix::from_fn(k, k, |i, j| cov[(observed[i], observed[j])]);
    let sxy = DMatrix::from_fn(1, k, |_, j| cov[(target, observed[j])]);
    let resid = DMatrix::from_fn(k, 1, |i, _| values[i] - mean[observed[i]]);
    let gain = &sxy * syy.try_inverse().unwrap();
    let m = mean[target] + (&gain * resid)[(0, 0)];
    let v = cov[(target, target)] - (&gain * sxy.transpose())[(0, 0)];
    (m, v)
}

fn kalman_oracle() -> Outcome {
    let (a, alpha, sigma, d, big_d, s) = (0.002, 0.9, 0.03, 0.001, 0.8, 0.02);
    let x_init = 0.05;
    let ys = [0.041, 0.038, 0.052];
    let spec = StateSpaceSpec::new(
        vec![a],
        Matrix::from_diag(&[alpha]),
        Matrix::from_diag(&[sigma]),
        vec![d],
        Matrix::from_diag(&[big_d]),
        Matrix::from_diag(&[s]),
        vec![1],
    )
    .unwrap();
    let obs: Vec<Vec<f64>> = ys.iter().map(|y| vec![*y]).collect();
    let out = kalman_filter(&spec, &obs, &[x_init], &KalmanOptions { steady_state_tol: None }).unwrap();

    // stacked (X1, X2, X3, Y1, Y2, Y3) with X0 = x_init fixed
    let q = sigma * sigma;
    let mut mean = vec![0.0; 6];
    let mut cov = DMatrix::zeros(6, 6);
    let mut mx = x_init;
    for k in 0..3 {
        mx = a + alpha * mx;
        mean[k] = mx;
        mean[3 + k] = d + big_d * mx;
    }
    for i in 0..3 {
        for j in 0..3 {
            // Cov(X_i, X_j) for i ≤ j is alpha^(j−i) Var(X_i)
            let (lo, hi) = (i.min(j), i.max(j));
            let var_lo: f64 = (0..=lo).map(|l| alpha.powi(2 * l as i32) * q).sum();
            let c = alpha.powi((hi - lo) as i32) * var_lo;
            cov[(i, j)] = c;
            cov[(i, 3 + j)] = big_d * c;
            cov[(3 + i, j)] = big_d * c;
            cov[(3 + i, 3 + j)] = big_d * big_d * c + if i == j { s } else { 0.0 };
        }
    }
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        let observed: Vec<usize> = (3..=3 + k).collect();
        let (m, v) = condition(&mean, &cov, &observed, &ys[..=k], k);
        let st = &out.states[k];
        worst = worst.max((st.x_upd[0] - m).abs()).max((st.p_upd[(0, 0)] - v).abs());
    }
    let y_cov = cov.view((3, 3), (3, 3)).into_owned();
    let resid = DMatrix::from_fn(3, 1, |i, _| ys[i] - mean[3 + i]);
    let quad = (resid.transpose() * y_cov.clone().try_inverse().unwrap() * &resid)[(0, 0)];
    let exact = -0.5 * (3.0 * (2.0 * std::f64::consts::PI).ln() + y_cov.determinant().ln() + quad);
    let ll_err = (out.loglik - exact).abs();
    let msg = format!("posterior error {worst:.2e}, log-likelihood error {ll_err:.2e}");
    if worst <= 1e-10 && ll_err <= 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

struct Recovery {
    a: Vec<f64>,
    alpha: Vec<f64>,
    beta: Matrix,
    sigma: Matrix,
    b: Vec<f64>,
}

fn fit_panel(spec: &SyntheticSpec, tau: &[usize], s: &Matrix) -> Recovery {
    let panel = simulate_panel(spec).unwrap().panel;
    let rows = panel_on_grid(&panel, tau).unwrap();
    let rcov = realized_cov_matrix(&rows).unwrap();
    let fit = fit_beta_sigma_rcov(&rcov, tau, &Weights::Full, 2, &RcovOptions::default()).unwrap();
    let p0 = VasicekParams::new(vec![0.0; 2], fit.beta.clone(), fit.sigma_sqrt.clone(), DELTA).unwrap();
    let x_init = cross_section_factor(&p0, tau, &rows[0]).unwrap();
    let drift = fit_drift_mle(
        &rows[1..],
        tau,
        DELTA,
        &fit.beta,
        &fit.sigma_sqrt,
        s,
        &x_init,
        &DriftStart::neutral(&fit.beta),
        &MleOptions::default(),
    )
    .unwrap();
    Recovery {
        a: drift.a,
        alpha: drift.alpha.diag(),
        sigma: fit.sigma_sqrt.outer_self(),
        beta: fit.beta,
        b: drift.b,
    }
}

fn parameter_recovery() -> Outcome {
    let tau = vec![1, 2, 5, 10, 21, 63];
    let mut root = Matrix::zeros(2, 2);
    root[(0, 0)] = 5e-4;
    root[(1, 0)] = -2e-4;
    root[(1, 1)] = 6e-4;
    let truth = VasicekParams::new(vec![2e-5, 1e-5], Matrix::from_diag(&[0.998, 0.95]), root, DELTA).unwrap();
    let (a, alpha) = (vec![3e-5, 5e-6], vec![0.997, 0.98]);
    // 10⁻⁵ in percent² is 10⁻⁹ for decimal yields
    let noise = 1e-9;
    let s = Matrix::identity(tau.len()).scale(noise);
    let spec = |p: &VasicekParams, a: &[f64], alpha: &[f64], seed: u64| SyntheticSpec {
        params: p.clone(),
        real_world: Some((a.to_vec(), Matrix::from_diag(alpha))),
        x0: (0..2).map(|i| a[i] / (1.0 - alpha[i])).collect(),
        tau: tau.clone(),
        dates: 5001,
        noise_std: noise.sqrt(),
        seed,
    };
    let est = fit_panel(&spec(&truth, &a, &alpha, 501), &tau, &s);

    let true_rcov = model_rcov(&truth.beta().diag(), &truth.sigma(), &tau).unwrap();
    let fitted_rcov = model_rcov(&est.beta.diag(), &est.sigma, &tau).unwrap();
    let rcov_err = max_rel_diff(fitted_rcov.as_slice(), true_rcov.as_slice());

    // parametric bootstrap around the fitted model
    let fitted = VasicekParams::new(est.b.clone(), est.beta.clone(), vasicek_crc::numerics::spd_sqrt(&est.sigma).unwrap(), DELTA).unwrap();
    let replicates = 20;
    let draws: Vec<Recovery> = (0..replicates)
        .map(|r| fit_panel(&spec(&fitted, &est.a, &est.alpha, 600 + r), &tau, &s))
        .collect();
    let se = |get: &dyn Fn(&Recovery) -> f64| {
        let v: Vec<f64> = draws.iter().map(get).collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    let mut worst_z: f64 = 0.0;
    for i in 0..2 {
        let za = (est.a[i] - a[i]).abs() / se(&|r| r.a[i]);
        let zal = (est.alpha[i] - alpha[i]).abs() / se(&|r| r.alpha[i]);
        worst_z = worst_z.max(za).max(zal);
    }
    let msg = format!(
        "model covariation within {:.1}% of truth; a, alpha within {worst_z:.2} bootstrap SE ({replicates} replicates)",
        100.0 * rcov_err
    );
    if rcov_err <= 0.05 && worst_z <= 3.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn rescaling() -> Outcome {
    let mut rng = RngStream::new(601, 0);
    let mut worst: f64 = 0.0;
    for d in [2, 5, 21] {
        for n in 1..=3 {
            let mu: Vec<f64> = (0..n).map(|_| 1e-3 * (rng.uniform() - 0.3)).collect();
            let gamma = Matrix::from_diag(&(0..n).map(|_| 0.3 + 0.69 * rng.uniform()).collect::<Vec<_>>());
            let mut root = Matrix::zeros(n, n);
            for i in 0..n {
                root[(i, i)] = 1e-3 * (0.2 + rng.uniform());
                for j in 0..i {
                    root[(i, j)] = 4e-4 * (rng.uniform() - 0.5);
                }
            }
            let big_gamma = root.outer_self();
            let fine = rescale_grid(&mu, &gamma, &big_gamma, d).unwrap();
            let (m2, g2, c2) = compose_grid(&fine, d).unwrap();
            let rel = |x: &[f64], y: &[f64]| {
                x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max) / max_abs(y)
            };
            worst = worst
                .max(rel(&m2, &mu))
                .max(rel(g2.as_slice(), gamma.as_slice()))
                .max(rel(c2.as_slice(), big_gamma.as_slice()));
        }
    }
    let msg = format!("largest relative composition error {worst:.2e}");
    if worst <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn measure_consistency() -> Outcome {
    let (n, steps, paths) = (2, 10, 100_000);
    let mut rng = RngStream::new(701, 0);
    let p = random_params(&mut rng, n);
    let x0 = random_state(&mut rng, n);
    let mut big = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            big[(i, j)] = 2.0 * (rng.uniform() - 0.5);
        }
    }
    let mpr = MarketPriceOfRisk::new(vec![0.2, -0.15], big).unwrap();
    let mprs = vec![mpr.clone(); steps];
    let mut draws = Vec::with_capacity(paths);
    for path in 0..paths {
        let mut mc = RngStream::new(702, path as u64);
        let mut factors = vec![x0.clone()];
        let mut eps = Vec::with_capacity(steps);
        for s in 0..steps {
            let e = mc.standard_normal_vec(n);
            factors.push(factor_step(&p, &factors[s], &e));
            eps.push(e);
        }
        draws.push(density_process(&factors, &mprs, &eps).unwrap());
    }
    let k = paths as f64;
    let mean = draws.iter().sum::<f64>() / k;
    let se = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt();
    let z = (mean - 1.0).abs() / se;

    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let q = random_params(&mut rng, n);
        let beta = Matrix::from_diag(&q.beta().diag());
        let lambda: Vec<f64> = (0..n).map(|_| rng.uniform() - 0.5).collect();
        let mut lam = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                lam[(i, j)] = 10.0 * (rng.uniform() - 0.5);
            }
        }
        let m = MarketPriceOfRisk::new(lambda, lam).unwrap();
        let (a, alpha) = real_world_transition(q.b(), &beta, q.sigma_sqrt(), &m);
        let back = infer_market_price(q.b(), &a, &beta, &alpha, q.sigma_sqrt()).unwrap();
        let rel = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max) / max_abs(y);
        worst = worst
            .max(rel(&back.lambda, &m.lambda))
            .max(rel(back.big_lambda.as_slice(), m.big_lambda.as_slice()));
    }
    let msg = format!("mean density {mean:.5} ({z:.2} SE from 1); market price round trip error {worst:.2e}");
    if z <= 4.0 && worst <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn distributional_backtest() -> Outcome {
    let v = 5e-4f64.powi(2);
    let p = VasicekParams::new(vec![1e-5], Matrix::from_diag(&[0.999]), Matrix::from_diag(&[v.sqrt()]), DELTA).unwrap();
    let x0 = 0.015;
    let m = 2520 + 21;
    let curve = YieldCurve::new(
        (1..=m)
            .map(|l| {
                let t = (l - 1) as f64 / 252.0;
                x0 + 0.012 * (1.0 - (-t / 3.0).exp())
            })
            .collect(),
    )
    .unwrap();
    let init = crc_init(p, vec![x0], curve).unwrap();
    let spec = PortfolioSpec::default();
    let paths = 10_000;

    let calm = simulate_portfolio_returns(&init, &ParameterProcess::Constant, &spec, Measure::P, paths, 801).unwrap();
    let jb = jarque_bera(&calm);

    // a variance history with 15% daily volatility of variance, fitted by
    // least squares, sets the scale of the volatility noise
    let source = StochVolParams::new(
        vec![0.02 * v],
        vec![0.98],
        Matrix::from_diag(&[0.15 * v.sqrt()]),
        Matrix::identity(1),
        Matrix::zeros(1, 1),
    )
    .unwrap();
    let mut rng = RngStream::new(802, 0);
    let mut series = vec![vec![v]];
    for t in 1..2000 {
        let next = stochvol_step(&source, &series[t - 1], &[rng.standard_normal()]);
        series.push(next);
    }
    let fitted = fit_stochvol(&series, None, Matrix::identity(1)).unwrap();
    let process = ParameterProcess::StochVol {
        params: fitted.clone(),
        zero_cross: true,
    };
    let wild = simulate_portfolio_returns(&init, &process, &spec, Measure::P, paths, 803).unwrap();
    let (lo, hi) = bootstrap_ci(&wild, excess_kurtosis, 1000, 0.95, &mut RngStream::new(804, 0));
    let tail = binomial_tail(20, 3, 0.05);
    let msg = format!(
        "constant model JB p = {:.3}; fitted Phi^1/2 = {:.2e}, excess kurtosis CI [{lo:.3}, {hi:.3}]; P(B(20, 0.05) >= 3) = {tail:.5}",
        jb.p_value,
        fitted.phi_sqrt()[(0, 0)]
    );
    if jb.p_value > 0.01 && lo > 0.0 && (tail - 0.0755).abs() <= 1e-4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn run_outputs(dir: &Path, tag: &str, threads: &str, inputs: &Inputs) -> Result<Vec<Vec<u8>>, String> {
    let out = |name: &str| dir.join(format!("{tag}_{name}"));
    let runs: Vec<(Vec<String>, Vec<std::path::PathBuf>)> = vec![
        (
            vec!["estimate".into(), "--data".into(), s(&inputs.panel), "--config".into(), s(&inputs.config),
                 "--out".into(), s(&out("est.csv")), "--params-out".into(), s(&out("model.json"))],
            vec![out("est.csv"), out("model.json")],
        ),
        (
            vec!["calibrate".into(), "--data".into(), s(&inputs.panel), "--date".into(), inputs.date.clone(),
                 "--params".into(), s(&inputs.model), "--config".into(), s(&inputs.config), "--out".into(), s(&out("theta.csv"))],
            vec![out("theta.csv"), out("theta.residuals.csv")],
        ),
        (
            vec!["simulate".into(), "--init-curve".into(), s(&inputs.panel), "--params".into(), s(&inputs.model),
                 "--stochvol".into(), s(&inputs.stochvol), "--config".into(), s(&inputs.config),
                 "--out".into(), s(&out("fan.csv")), "--snapshots".into(), s(&out("paths.csv"))],
            vec![out("fan.csv"), out("paths.csv")],
        ),
        (
            vec!["backtest".into(), "--data".into(), s(&inputs.panel), "--config".into(), s(&inputs.config),
                 "--out".into(), s(&out("bt.csv"))],
            vec![out("bt.csv"), out("bt.summary.json")],
        ),
    ];
    let mut bytes = Vec::new();
    for (args, files) in runs {
        let mut full = vec!["--threads".to_string(), threads.to_string()];
        full.extend(args);
        let refs: Vec<&str> = full.iter().map(String::as_str).collect();
        let o = common::vcrc(&refs);
        if common::code(&o) != 0 {
            return Err(format!("`vcrc {}` exited {}: {}", refs.join(" "), common::code(&o), common::stderr(&o)));
        }
        for f in files {
            bytes.push(std::fs::read(&f).map_err(|e| format!("{}: {e}", f.display()))?);
        }
    }
    Ok(bytes)
}

struct Inputs {
    panel: std::path::PathBuf,
    config: std::path::PathBuf,
    model: std::path::PathBuf,
    stochvol: std::path::PathBuf,
    date: String,
}

fn s(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let panel = common::write_synthetic(d, 330, 3);
    let inputs = Inputs {
        config: common::write_file(d, "config.json", common::QUICK_CONFIG),
        model: common::write_file(
            d,
            "model.json",
            r#"{"b": [2e-5, 1e-5], "beta": [[0.998, 0.0], [0.0, 0.95]], "sigma_sqrt": [[5e-4, 0.0], [-2e-4, 6e-4]],
                "lambda": [0.05, -0.02], "Lambda": [[0.5, 0.0], [0.0, 1.0]]}"#,
        ),
        stochvol: {
            let v = 2.5e-7f64;
            let sv = StochVolParams::new(
                vec![0.02 * v, 0.05 * 3.6e-7],
                vec![0.98, 0.95],
                Matrix::from_diag(&[0.1 * v.sqrt(), 0.1 * 6e-4]),
                Matrix::identity(2),
                Matrix::from_diag(&[-0.3, 0.2]),
            )
            .unwrap();
            common::write_file(d, "stochvol.json", &serde_json::to_string(&sv).unwrap())
        },
        date: "2001-02-05".into(),
        panel,
    };
    let first = run_outputs(d, "a", "1", &inputs)?;
    let second = run_outputs(d, "b", "3", &inputs)?;
    let total: usize = first.iter().map(Vec::len).sum();
    if first == second {
        Ok(format!("4 commands, {} output files ({total} bytes) identical across two runs", first.len()))
    } else {
        let which: Vec<usize> = (0..first.len()).filter(|&i| first[i] != second[i]).collect();
        Err(format!("output files {which:?} differ between runs"))
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("affine bond prices match Monte Carlo bank-account discounting", affine_prices),
        ("calibrated extension re-prices the target curve", calibration_round_trip),
        ("forward-rate and explicit re-calibration steps agree", hjm_equivalence),
        ("Kalman filter matches exact Gaussian conditioning", kalman_oracle),
        ("parameters recovered from a simulated two-factor panel", parameter_recovery),
        ("time-grid rescaling composes back exactly", rescaling),
        ("density process has unit mean; market prices round trip", measure_consistency),
        ("return distributions: Gaussian without, heavy-tailed with volatility noise", distributional_backtest),
        ("command-line outputs are reproducible", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let why = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {why}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
