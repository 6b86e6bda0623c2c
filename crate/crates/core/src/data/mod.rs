//! Yield panels on disk, cleaning, interpolation to integer lags, and the
//! JSON run configuration.

mod config;
mod panel;
mod synthetic;

pub use config::{config_hash, provenance_header, RunConfig, SimulationConfig};
pub use panel::{
    handle_missing, interpolate_to_grid, load_panel, panel_on_grid, read_panel, save_panel, write_panel,
    CleaningReport, MissingPolicy, Units, YieldPanel, DEFAULT_DELTA,
};
pub use synthetic::{business_days, simulate_panel, SyntheticPanel, SyntheticSpec};

use chrono::NaiveDate;
use thiserror::Error;

use crate::error::ModelError;
use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("duplicate observation for date {date}, tau {tau}")]
    Duplicate { date: NaiveDate, tau: usize },
    #[error("no observations in input")]
    Empty,
    #[error("units not declared; set `# units=decimal` or `# units=percent`, or pass them explicitly")]
    UndeclaredUnits,
    #[error("declared units {declared} conflict with requested {requested}")]
    ConflictingUnits { declared: String, requested: String },
    #[error("{} missing cells, first at date {} tau {}", .cells.len(), .cells[0].0, .cells[0].1)]
    Missing { cells: Vec<(NaiveDate, usize)> },
    #[error("date {date} has {found} tenors; interpolation needs at least 2")]
    TooFewTenors { date: NaiveDate, found: usize },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("config error: {0}")]
    Config(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
