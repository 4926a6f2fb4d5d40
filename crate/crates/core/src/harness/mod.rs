//! Measurement and orchestration: norm bookkeeping for runs, decay-rate
//! fitting, run configuration, and the file formats the command-line
//! driver reads and writes.
//!
//! The solver modules produce trajectories; everything here turns them
//! into numbers and verdicts. The central type is [`NormSeries`], a
//! time-indexed table of named norms; [`decay_fit`] extracts power-law
//! exponents from it, [`xnorm_scan`] fills it from a trajectory,
//! [`RunConfig`] describes a run end to end, and the `io` module pins the
//! CSV/JSON formats.

pub mod config;
pub mod io;
pub mod series;
pub mod xnorm;

use thiserror::Error;

use crate::integrator::IntegratorError;
use crate::model::ModelError;

pub use config::{parse_run_config, FitSpec, RunConfig, DEFAULT_FIT_START};
pub use io::{
    read_norm_series_csv, thread_setting, write_json, write_norm_series_csv, CriterionOutcome,
    NamedFit, RunSummary, ThreadSetting, THREADS_ENV_VAR,
};
pub use series::{decay_fit, DecayFit, NormSeries, MIN_FIT_POINTS};
pub use xnorm::{compute_xnorm_components, xnorm_scan, XNormRow, XNORM_COLUMNS};

/// Errors from series bookkeeping, fitting, configuration, and file
/// interfaces.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("row has {got} values where the series holds {want} columns")]
    RowArity { got: usize, want: usize },
    #[error("time {t} does not extend the series (times must strictly increase)")]
    NonIncreasingTime { t: f64 },
    #[error("non-finite entry in column {column} at t = {t}")]
    NonFiniteEntry { column: String, t: f64 },
    #[error("no column named {0}")]
    UnknownColumn(String),
    #[error("decay fit needs at least {need} samples in the window, got {got}")]
    TooFewFitPoints { got: usize, need: usize },
    #[error("nonpositive value {value} at t = {t}; log-log fits need positive data")]
    NonpositiveValue { t: f64, value: f64 },
    #[error("no samples between t = {t0} and t = {t1}")]
    EmptyWindow { t0: f64, t1: f64 },
    #[error("all window times coincide; the fit is degenerate")]
    DegenerateFitWindow,
    #[error("config (line {line}): {message}")]
    Config { line: usize, message: String },
    #[error("CSV line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("{message}")]
    Io { message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
}
