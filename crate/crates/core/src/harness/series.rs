//! Time-indexed norm records and decay-exponent fitting.
//!
//! A [`NormSeries`] is a small column table: strictly increasing times and
//! named real columns of equal length, the shape every diagnostic in this
//! workspace reports. Decay rates are measured by [`decay_fit`], an ordinary
//! least-squares line through (log t, log value): for a norm behaving like
//! `t^a` the slope recovers `a`, and the `r^2` of the fit tells how well a
//! pure power law explains the data. Fits refuse windows with fewer than
//! [`MIN_FIT_POINTS`] samples or any nonpositive value, since log-log slopes
//! on tiny or sign-crossing data are noise.

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// Fewest samples a decay fit accepts; below this a slope is anecdote.
pub const MIN_FIT_POINTS: usize = 8;

/// One named column of a [`NormSeries`].
#[derive(Clone, Debug, Serialize, Deserialize)]
struct NormColumn {
    name: String,
    values: Vec<f64>,
}

/// Strictly increasing times with aligned, named, finite-valued columns.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormSeries {
    times: Vec<f64>,
    columns: Vec<NormColumn>,
}

impl NormSeries {
    /// An empty series with the given column names.
    pub fn new<S: AsRef<str>>(column_names: &[S]) -> Self {
        NormSeries {
            times: Vec::new(),
            columns: column_names
                .iter()
                .map(|n| NormColumn {
                    name: n.as_ref().to_string(),
                    values: Vec::new(),
                })
                .collect(),
        }
    }

    /// Append one row; the time must exceed the last and every entry must
    /// be finite.
    pub fn push_row(&mut self, t: f64, values: &[f64]) -> Result<(), HarnessError> {
        if values.len() != self.columns.len() {
            return Err(HarnessError::RowArity {
                got: values.len(),
                want: self.columns.len(),
            });
        }
        if !t.is_finite() || self.times.last().is_some_and(|&last| t <= last) {
            return Err(HarnessError::NonIncreasingTime { t });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(HarnessError::NonFiniteEntry {
                column: self.columns[pos].name.clone(),
                t,
            });
        }
        self.times.push(t);
        for (col, &v) in self.columns.iter_mut().zip(values) {
            col.values.push(v);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    /// Values of a named column.
    pub fn column(&self, name: &str) -> Result<&[f64], HarnessError> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
            .ok_or_else(|| HarnessError::UnknownColumn(name.to_string()))
    }

    /// (time, value) pairs of a column restricted to `t0 <= t <= t1`.
    pub fn window(&self, name: &str, t0: f64, t1: f64) -> Result<Vec<(f64, f64)>, HarnessError> {
        let values = self.column(name)?;
        Ok(self
            .times
            .iter()
            .zip(values)
            .filter(|(&t, _)| t0 <= t && t <= t1)
            .map(|(&t, &v)| (t, v))
            .collect())
    }

    /// max/min of a column over a window; errors on empty windows or
    /// nonpositive values (the ratio is meant for norms).
    pub fn ratio_max_min(&self, name: &str, t0: f64, t1: f64) -> Result<f64, HarnessError> {
        let rows = self.window(name, t0, t1)?;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (t, v) in &rows {
            if !(*v > 0.0) {
                return Err(HarnessError::NonpositiveValue { t: *t, value: *v });
            }
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        if rows.is_empty() {
            return Err(HarnessError::EmptyWindow { t0, t1 });
        }
        Ok(hi / lo)
    }
}

/// A fitted power law `value ~ C t^exponent` over a time window.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DecayFit {
    /// Least-squares slope of log(value) against log(t).
    pub exponent: f64,
    /// Coefficient of determination of the log-log line.
    pub r_squared: f64,
    /// Number of samples in the window.
    pub points: usize,
}

/// Least-squares power-law fit of `series[column]` over `t in [t0, t1]`.
///
/// Requires at least [`MIN_FIT_POINTS`] samples with positive times and
/// values. Constant data fits exactly with exponent 0 and `r^2 = 1`.
pub fn decay_fit(
    series: &NormSeries,
    column: &str,
    t0: f64,
    t1: f64,
) -> Result<DecayFit, HarnessError> {
    let rows = series.window(column, t0, t1)?;
    if rows.len() < MIN_FIT_POINTS {
        return Err(HarnessError::TooFewFitPoints {
            got: rows.len(),
            need: MIN_FIT_POINTS,
        });
    }
    let mut xs = Vec::with_capacity(rows.len());
    let mut ys = Vec::with_capacity(rows.len());
    for (t, v) in rows {
        if !(t > 0.0 && v > 0.0) {
            return Err(HarnessError::NonpositiveValue { t, value: v });
        }
        xs.push(t.ln());
        ys.push(v.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx = xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    let sxy = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>();
    let syy = ys.iter().map(|y| (y - my) * (y - my)).sum::<f64>();
    if sxx == 0.0 {
        return Err(HarnessError::DegenerateFitWindow);
    }
    let slope = sxy / sxx;
    // All residual variance explained when the data is flat to roundoff
    // (`ln v` constant up to accumulation error in the mean).
    let flat_floor = f64::EPSILON * f64::EPSILON * n * (1.0 + my * my);
    let r_squared = if syy <= flat_floor {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(DecayFit {
        exponent: slope,
        r_squared,
        points: xs.len(),
    })
}
