//! File interfaces: norm-series CSV, summary JSON, and the recorded
//! execution environment.
//!
//! CSV layout: UTF-8, one header row `t,<column names>`, one row per
//! recorded time, floats printed in shortest round-trip form (Rust's
//! default float formatting), so a written-then-read series is
//! bit-identical to the in-memory one and every downstream fit agrees
//! bit-for-bit.
//!
//! The summary JSON carries the run's configuration echo, the recorded
//! thread setting, initial and final norm rows, fitted exponents, and a
//! pass/fail entry per configured assertion. This build executes on a
//! single thread regardless of the requested count (no data-parallel
//! runtime is linked); the `EP2D_THREADS` value is parsed, validated, and
//! recorded so run provenance captures the request, and results are
//! bitwise deterministic with or without `--deterministic` (the flag is
//! recorded and asserts the single-thread condition it demands).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::XNormComponents;

use super::{DecayFit, HarnessError, NormSeries, RunConfig};

/// Environment variable naming the requested worker-thread count.
pub const THREADS_ENV_VAR: &str = "EP2D_THREADS";

/// The recorded execution environment of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadSetting {
    /// Value of [`THREADS_ENV_VAR`], if set.
    pub requested: Option<usize>,
    /// Threads actually used (always 1 in this build).
    pub effective: usize,
}

/// Read and validate the thread setting from the environment.
pub fn thread_setting() -> Result<ThreadSetting, HarnessError> {
    let requested = match std::env::var(THREADS_ENV_VAR) {
        Ok(raw) => Some(raw.parse::<usize>().map_err(|e| HarnessError::Config {
            line: 0,
            message: format!("{THREADS_ENV_VAR}={raw}: {e}"),
        })?),
        Err(std::env::VarError::NotPresent) => None,
        Err(e) => {
            return Err(HarnessError::Config {
                line: 0,
                message: format!("{THREADS_ENV_VAR}: {e}"),
            })
        }
    };
    if requested == Some(0) {
        return Err(HarnessError::Config {
            line: 0,
            message: format!("{THREADS_ENV_VAR} must be positive"),
        });
    }
    Ok(ThreadSetting {
        requested,
        effective: 1,
    })
}

/// One fitted power law, named by its column.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NamedFit {
    /// Fitted column.
    pub column: String,
    /// Fit window.
    pub t0: f64,
    pub t1: f64,
    /// Fit result.
    pub exponent: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl NamedFit {
    pub fn new(column: &str, t0: f64, t1: f64, fit: DecayFit) -> Self {
        NamedFit {
            column: column.into(),
            t0,
            t1,
            exponent: fit.exponent,
            r_squared: fit.r_squared,
            points: fit.points,
        }
    }
}

/// One asserted criterion with its measured value.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionOutcome {
    /// Short name of the assertion.
    pub name: String,
    /// Whether it held.
    pub passed: bool,
    /// The measured quantity the assertion bounds.
    pub measured: f64,
    /// Human-readable restatement with the threshold.
    pub detail: String,
}

/// Run metadata and results written as the summary JSON.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    /// Echo of the configuration that produced the run.
    pub config: RunConfig,
    /// Recorded thread request and the effective count.
    pub threads: ThreadSetting,
    /// Whether strict deterministic mode was requested.
    pub deterministic: bool,
    /// Norm row at the first snapshot.
    pub initial: XNormComponents,
    /// Norm row at the last snapshot.
    pub final_row: XNormComponents,
    /// Fitted exponents.
    pub fits: Vec<NamedFit>,
    /// Configured assertions and their outcomes.
    pub criteria: Vec<CriterionOutcome>,
}

impl RunSummary {
    /// True iff every configured assertion held.
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io {
        message: format!("{}: {e}", path.display()),
    }
}

/// Write a norm series as CSV (header `t,<columns>`, full round-trip
/// float precision).
pub fn write_norm_series_csv(series: &NormSeries, path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| io_err(path, e))?;
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header = vec!["t".to_string()];
    header.extend(series.column_names().iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for j in 0..series.len() {
        let mut record = vec![format!("{}", series.times()[j])];
        for name in series.column_names() {
            let v = series.column(name).expect("column exists")[j];
            record.push(format!("{v}"));
        }
        w.write_record(&record).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Read a norm series back from CSV, re-validating every row.
pub fn read_norm_series_csv(path: &Path) -> Result<NormSeries, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header = r.headers().map_err(|e| io_err(path, e))?.clone();
    let mut names = header.iter();
    if names.next() != Some("t") {
        return Err(HarnessError::Csv {
            line: 1,
            message: format!("{}: header must start with `t`", path.display()),
        });
    }
    let columns: Vec<String> = names.map(|s| s.to_string()).collect();
    if columns.is_empty() {
        return Err(HarnessError::Csv {
            line: 1,
            message: format!("{}: no norm columns", path.display()),
        });
    }
    let mut series = NormSeries::new(&columns);
    for (idx, record) in r.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| io_err(path, e))?;
        let mut values = Vec::with_capacity(record.len());
        for field in record.iter() {
            values.push(field.parse::<f64>().map_err(|e| HarnessError::Csv {
                line,
                message: format!("{}: `{field}`: {e}", path.display()),
            })?);
        }
        if values.len() != columns.len() + 1 {
            return Err(HarnessError::Csv {
                line,
                message: format!(
                    "{}: row has {} fields, header has {}",
                    path.display(),
                    values.len(),
                    columns.len() + 1
                ),
            });
        }
        series.push_row(values[0], &values[1..])?;
    }
    Ok(series)
}

/// Write any serializable report as pretty JSON.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| io_err(path, e))?;
        }
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))?;
    Ok(())
}
