//! Library side of the `glx` command-line tool.
//!
//! Exit codes: 0 on success, 1 on any error, 2 when `estimate --method
//! closed` finds that the optimality conditions do not hold.

pub mod args;
mod commands;
pub mod io;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use glx_core::closed_form::ClosedFormError;
use glx_core::covariance::CovarianceError;
use glx_core::metrics::MetricsError;
use glx_core::numerics::NumericsError;
use glx_core::solver::SolverError;
use thiserror::Error;

use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CONDITIONS_FAILED: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Covariance(#[from] CovarianceError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

/// Successful command outcomes that still map to distinct exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    ConditionsFailed,
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let count = match flag {
        Some(n) => Some(n),
        None => match std::env::var("GLX_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| CliError::Usage(format!("GLX_THREADS must be a positive integer, got {v:?}")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = count {
        if n == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        // A pool that already exists (repeated calls in one process) is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let echo: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let result = configure_threads(cli.threads).and_then(|()| match &cli.command {
        Command::Estimate(a) => commands::estimate(a, &echo),
        Command::Check(a) => commands::check(a, &echo),
        Command::Bench(a) => commands::bench(a, &echo),
        Command::Gen(a) => commands::generate(a, &echo),
        Command::Sweep(a) => commands::sweep(a, &echo),
        Command::CycleGap(a) => commands::cycle_gap(a, &echo),
    });
    match result {
        Ok(Status::Done) => EXIT_OK,
        Ok(Status::ConditionsFailed) => {
            eprintln!("glx: closed-form optimality conditions do not hold");
            EXIT_CONDITIONS_FAILED
        }
        Err(e) => {
            eprintln!("glx: {e}");
            EXIT_ERROR
        }
    }
}
