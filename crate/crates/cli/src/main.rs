//! `vcrc`: estimation, calibration, simulation and back-testing from the
//! command line. Data goes to files, logs to standard error.
//!
//! Exit codes: 0 success, 2 partial success (some windows or periods
//! failed, output still written), 64 usage error, 65 invalid input data,
//! 1 any other failure.

mod args;
mod commands;
mod error;
mod model_file;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use commands::Outcome;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command, cli.threads) {
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
