#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vasicek_crc::data::{save_panel, simulate_panel, SyntheticSpec};
use vasicek_crc::numerics::Matrix;
use vasicek_crc::VasicekParams;

pub const TAU: [usize; 8] = [1, 2, 5, 10, 21, 63, 126, 252];

/// Two-factor model with a slow and a fast component.
pub fn two_factor() -> VasicekParams {
    let mut s = Matrix::zeros(2, 2);
    s[(0, 0)] = 5e-4;
    s[(1, 0)] = -2e-4;
    s[(1, 1)] = 6e-4;
    VasicekParams::new(vec![2e-5, 1e-5], Matrix::from_diag(&[0.998, 0.95]), s, 1.0 / 252.0).unwrap()
}

pub fn write_synthetic(dir: &Path, dates: usize, seed: u64) -> PathBuf {
    let spec = SyntheticSpec {
        params: two_factor(),
        real_world: None,
        x0: vec![0.02, 0.005],
        tau: TAU.to_vec(),
        dates,
        noise_std: 3e-5,
        seed,
    };
    let path = dir.join("panel.csv");
    save_panel(&path, &simulate_panel(&spec).unwrap().panel).unwrap();
    path
}

pub fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

/// Small windows and few paths, so every command finishes in seconds.
pub const QUICK_CONFIG: &str = r#"{
    "seed": 11,
    "estimation": {"window": 120, "factors": 2, "tau": [1, 2, 5, 10, 21, 63], "stride": 21},
    "simulation": {"horizon": 10, "paths": 200, "fan_lags": [1, 21, 63, 252]},
    "backtest": {"portfolio": {"maturities": [42, 126, 252], "horizon": 21}, "paths": 300, "stochvol_window": 5}
}"#;

pub fn vcrc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vcrc"))
        .args(args)
        .env_remove("CRC_THREADS")
        .output()
        .expect("vcrc runs")
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}
