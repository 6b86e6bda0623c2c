use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use vasicek_crc::backtest::Measure;
use vasicek_crc::data::{MissingPolicy, Units};

#[derive(Debug, Parser)]
#[command(name = "vcrc", version, about = "Consistently re-calibrated Vasicek term-structure toolkit")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "CRC_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rolling estimation of the model on a yield panel.
    Estimate(EstimateArgs),
    /// Hull–White extension reproducing one date's curve.
    Calibrate(CalibrateArgs),
    /// Re-calibrated curve paths from an initial curve.
    Simulate(SimulateArgs),
    /// Rolling estimation, portfolio simulation and coverage test.
    Backtest(BacktestArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; missing keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Units of the input yields when the file does not declare them.
    #[arg(long)]
    pub units: Option<Units>,
    /// Missing-data policy: forward-fill, drop-date or error.
    #[arg(long)]
    pub missing: Option<MissingPolicy>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub factors: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the last window's model as JSON.
    #[arg(long)]
    pub params_out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Curve date, YYYY-MM-DD.
    #[arg(long)]
    pub date: String,
    /// Model JSON (as written by `estimate --params-out`).
    #[arg(long)]
    pub params: PathBuf,
    /// Longest lag of the target curve (default: longest tenor).
    #[arg(long)]
    pub max_lag: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Re-pricing residuals (default: next to `--out`).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Yield panel holding the initial curve.
    #[arg(long)]
    pub init_curve: PathBuf,
    /// Curve date (default: the last date).
    #[arg(long)]
    pub date: Option<String>,
    #[arg(long)]
    pub params: PathBuf,
    /// Stochastic-volatility parameters JSON; constant parameters otherwise.
    #[arg(long)]
    pub stochvol: Option<PathBuf>,
    #[arg(long)]
    pub measure: Option<Measure>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub max_lag: Option<usize>,
    /// Comma-separated fan lags.
    #[arg(long, value_delimiter = ',')]
    pub lags: Option<Vec<usize>>,
    /// Comma-separated fan quantile levels.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    #[arg(long)]
    pub zero_cross: bool,
    /// Quantile fan, long format.
    #[arg(long)]
    pub out: PathBuf,
    /// Full curve of every path and step.
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub factors: Option<usize>,
    #[arg(long)]
    pub paths: Option<usize>,
    /// Per-period results.
    #[arg(long)]
    pub out: PathBuf,
    /// Coverage summary JSON (default: next to `--out`).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}
