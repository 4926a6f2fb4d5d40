//! Run configuration: the one record an end-to-end run needs, and the
//! flat-text parser that builds it with line-numbered diagnostics.
//!
//! Format: `key = value` lines grouped under `[section]` headers, `#`
//! comments, blank lines ignored. Unknown sections and unknown keys are
//! hard errors (a typo must not silently fall back to a default), as are
//! repeated keys. Missing optional keys take the documented defaults;
//! `[grid]` and `[run]` carry the four values with no sensible default
//! (grid size, box length, amplitude, horizon).
//!
//! ```text
//! [grid]
//! nx = 512              # points per axis (square grid)
//! box_length = 256.0
//!
//! [run]
//! eps = 0.01            # data amplitude
//! t_end = 100.0
//! dt = 0.25             # time step (default 0.0125)
//! record_stride = 10    # snapshots every stride steps (default 1)
//! nonlinear = true      # default true; linear-decay runs force false
//!
//! [params]              # optional overrides of the desk-scale ParamSet
//! n_top = 8
//! n_mid = 4
//! n_one = 2
//! delta1 = 0.05
//! delta2 = 0.4
//! eps1 = 0.1
//!
//! [data]                # optional; Gaussian density/potential by default
//! density = gaussian    # zero | gaussian | log_gaussian | speckled
//! density_width = 3.0
//! potential = gaussian
//! potential_width = 3.0
//! density_modes = 8     # speckled shapes only
//! potential_modes = 8
//! seed = 0
//!
//! [output]              # optional; omitted paths suppress that file
//! csv = runs/decay.csv
//! json = runs/summary.json
//!
//! [fit]                 # optional; default column/window used if absent
//! column = sup_decay
//! t0 = 5.0
//! t1 = 100.0
//! min_exponent = -1.15  # assertion bounds; each optional
//! max_exponent = -0.85
//! min_r_squared = 0.98
//! ```

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::integrator::{RunSpec, WRAP_FRACTION};
use crate::model::{InitialDataSpec, ParamSet, ProfileShape};
use crate::spectral::GridSpec;

use super::HarnessError;

/// Default fit-window start: early times are transient, decay statements
/// are asymptotic.
pub const DEFAULT_FIT_START: f64 = 5.0;

/// A requested power-law fit with optional assertion bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    /// Series column to fit.
    pub column: String,
    /// Window start; defaults to [`DEFAULT_FIT_START`].
    pub t0: f64,
    /// Window end; `None` means `min(t_end, T_wrap)`.
    pub t1: Option<f64>,
    /// Assertion: fitted exponent at least this.
    pub min_exponent: Option<f64>,
    /// Assertion: fitted exponent at most this.
    pub max_exponent: Option<f64>,
    /// Assertion: fit quality at least this.
    pub min_r_squared: Option<f64>,
}

impl Default for FitSpec {
    fn default() -> Self {
        FitSpec {
            column: "sup_decay".into(),
            t0: DEFAULT_FIT_START,
            t1: None,
            min_exponent: None,
            max_exponent: None,
            min_r_squared: None,
        }
    }
}

/// Everything one run needs: discretization, amplitude, horizon, norm
/// parameters, initial data, output paths, and the fit request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Points per axis (square grid).
    pub nx: usize,
    /// Box side length.
    pub box_length: f64,
    /// Data amplitude `eps` (duplicated into `data.amplitude`).
    pub eps: f64,
    /// Time step.
    pub dt: f64,
    /// Final time.
    pub t_end: f64,
    /// Snapshots recorded every this many steps.
    pub record_stride: usize,
    /// Whether the quadratic nonlinearity is on (the task selector:
    /// `simulate` keeps it, `linear-decay` clears it).
    pub nonlinear: bool,
    /// Norm and exponent parameters.
    pub params: ParamSet,
    /// Initial data specification.
    pub data: InitialDataSpec,
    /// Norm series CSV destination, if any.
    pub csv_path: Option<PathBuf>,
    /// Summary JSON destination, if any.
    pub json_path: Option<PathBuf>,
    /// Fit request.
    pub fit: FitSpec,
}

impl RunConfig {
    /// The validated grid (parse-time validation makes this infallible
    /// for parsed configs; hand-built ones get the constructor's errors).
    pub fn grid(&self) -> Result<GridSpec, HarnessError> {
        GridSpec::square(self.nx, self.box_length).map_err(|e| HarnessError::Config {
            line: 0,
            message: e.to_string(),
        })
    }

    /// The wrap horizon `T_wrap` of the configured box.
    pub fn t_wrap(&self) -> f64 {
        WRAP_FRACTION * self.box_length
    }

    /// Fit window: requested `t0` and `t1`, with `t1` defaulting to
    /// `min(t_end, T_wrap)`.
    pub fn fit_window(&self) -> (f64, f64) {
        let t1 = self.fit.t1.unwrap_or_else(|| self.t_end.min(self.t_wrap()));
        (self.fit.t0, t1)
    }

    /// Latest time the weighted profile norm is trusted: `T_wrap / 2`,
    /// after which periodization contaminates the centered-box weight.
    pub fn weighted_fit_end(&self) -> f64 {
        0.5 * self.t_wrap()
    }

    /// Integrator run specification for this config.
    pub fn run_spec(&self) -> RunSpec {
        RunSpec {
            t_end: self.t_end,
            dt: self.dt,
            record_stride: self.record_stride,
            nonlinear: self.nonlinear,
        }
    }
}

/// One parsed `key = value` line with its provenance.
struct Entry {
    line: usize,
    section: String,
    key: String,
    value: String,
}

/// Every legal `(section, key)` pair; anything else is a hard error.
const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("grid", &["nx", "box_length"]),
    ("run", &["eps", "t_end", "dt", "record_stride", "nonlinear"]),
    (
        "params",
        &["n_top", "n_mid", "n_one", "delta1", "delta2", "eps1"],
    ),
    (
        "data",
        &[
            "density",
            "density_width",
            "density_modes",
            "potential",
            "potential_width",
            "potential_modes",
            "seed",
        ],
    ),
    ("output", &["csv", "json"]),
    (
        "fit",
        &["column", "t0", "t1", "min_exponent", "max_exponent", "min_r_squared"],
    ),
];

/// Parse and validate a configuration text.
pub fn parse_run_config(text: &str) -> Result<RunConfig, HarnessError> {
    let entries = tokenize(text)?;

    for e in &entries {
        let Some((_, keys)) = KNOWN_KEYS.iter().find(|(s, _)| *s == e.section) else {
            return Err(HarnessError::Config {
                line: e.line,
                message: format!("unknown section [{}]", e.section),
            });
        };
        if !keys.contains(&e.key.as_str()) {
            return Err(HarnessError::Config {
                line: e.line,
                message: format!("unknown key `{}` in section [{}]", e.key, e.section),
            });
        }
    }
    let entries = entries.as_slice();

    let nx: usize = require(entries, "grid", "nx")?;
    let box_length: f64 = require(entries, "grid", "box_length")?;
    GridSpec::square(nx, box_length).map_err(|e| HarnessError::Config {
        line: section_line(entries, "grid"),
        message: e.to_string(),
    })?;

    let eps: f64 = require(entries, "run", "eps")?;
    let t_end: f64 = require(entries, "run", "t_end")?;
    let dt: f64 = optional(entries, "run", "dt")?.unwrap_or(0.0125);
    let record_stride: usize = optional(entries, "run", "record_stride")?.unwrap_or(1);
    let nonlinear: bool = optional(entries, "run", "nonlinear")?.unwrap_or(true);

    let defaults = ParamSet::default();
    let params = ParamSet::new(
        optional(entries, "params", "n_top")?.unwrap_or(defaults.n_top),
        optional(entries, "params", "n_mid")?.unwrap_or(defaults.n_mid),
        optional(entries, "params", "n_one")?.unwrap_or(defaults.n_one),
        optional(entries, "params", "delta1")?.unwrap_or(defaults.delta1),
        optional(entries, "params", "delta2")?.unwrap_or(defaults.delta2),
        optional(entries, "params", "eps1")?.unwrap_or(defaults.eps1),
    )
    .map_err(|e| HarnessError::Config {
        line: section_line(entries, "params"),
        message: e.to_string(),
    })?;

    let density = parse_shape(entries, "density")?;
    let potential = parse_shape(entries, "potential")?;
    let seed: u64 = optional(entries, "data", "seed")?.unwrap_or(0);
    let data = InitialDataSpec {
        amplitude: eps,
        density,
        potential,
        seed,
    };

    let csv_path = optional::<String>(entries, "output", "csv")?.map(PathBuf::from);
    let json_path = optional::<String>(entries, "output", "json")?.map(PathBuf::from);

    let fit_defaults = FitSpec::default();
    let fit = FitSpec {
        column: optional(entries, "fit", "column")?.unwrap_or(fit_defaults.column),
        t0: optional(entries, "fit", "t0")?.unwrap_or(fit_defaults.t0),
        t1: optional(entries, "fit", "t1")?,
        min_exponent: optional(entries, "fit", "min_exponent")?,
        max_exponent: optional(entries, "fit", "max_exponent")?,
        min_r_squared: optional(entries, "fit", "min_r_squared")?,
    };

    let config = RunConfig {
        nx,
        box_length,
        eps,
        dt,
        t_end,
        record_stride,
        nonlinear,
        params,
        data,
        csv_path,
        json_path,
        fit,
    };
    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<(), HarnessError> {
    let bad = |message: String| Err(HarnessError::Config { line: 0, message });
    if !(config.eps.is_finite() && config.eps >= 0.0) {
        return bad(format!("eps must be finite and nonnegative, got {}", config.eps));
    }
    if !(config.dt.is_finite() && config.dt > 0.0) {
        return bad(format!("dt must be positive, got {}", config.dt));
    }
    if config.record_stride == 0 {
        return bad("record_stride must be positive".into());
    }
    if !(config.t_end.is_finite() && config.t_end > 0.0) {
        return bad(format!("t_end must be positive, got {}", config.t_end));
    }
    if config.t_end > config.t_wrap() {
        return bad(format!(
            "t_end = {} exceeds the wrap horizon T_wrap = {:.3} of a box of length {}",
            config.t_end,
            config.t_wrap(),
            config.box_length
        ));
    }
    Ok(())
}

fn tokenize(text: &str) -> Result<Vec<Entry>, HarnessError> {
    let mut entries: Vec<Entry> = Vec::new();
    let mut section = String::new();
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    let mut any_line = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        any_line = true;
        if let Some(name) = stripped.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(HarnessError::Config {
                line,
                message: format!("malformed section header `{stripped}`"),
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = stripped.split_once('=').ok_or(HarnessError::Config {
            line,
            message: format!("expected `key = value`, got `{stripped}`"),
        })?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if section.is_empty() {
            return Err(HarnessError::Config {
                line,
                message: format!("key `{key}` appears before any [section] header"),
            });
        }
        if key.is_empty() || value.is_empty() {
            return Err(HarnessError::Config {
                line,
                message: "empty key or value".into(),
            });
        }
        if !seen.insert((section.clone(), key.clone())) {
            return Err(HarnessError::Config {
                line,
                message: format!("duplicate key `{key}` in section [{section}]"),
            });
        }
        entries.push(Entry {
            line,
            section: section.clone(),
            key,
            value,
        });
    }
    if !any_line {
        return Err(HarnessError::Config {
            line: 0,
            message: "empty configuration".into(),
        });
    }
    Ok(entries)
}

fn take<'a>(entries: &'a [Entry], section: &str, key: &str) -> Option<&'a Entry> {
    entries.iter().find(|e| e.section == section && e.key == key)
}

fn section_line(entries: &[Entry], section: &str) -> usize {
    entries
        .iter()
        .find(|e| e.section == section)
        .map_or(0, |e| e.line)
}

fn parse_value<T: std::str::FromStr>(e: &Entry) -> Result<T, HarnessError>
where
    T::Err: std::fmt::Display,
{
    e.value.parse().map_err(|err| HarnessError::Config {
        line: e.line,
        message: format!("key `{}`: cannot parse `{}`: {}", e.key, e.value, err),
    })
}

fn require<T: std::str::FromStr>(
    entries: &[Entry],
    section: &str,
    key: &str,
) -> Result<T, HarnessError>
where
    T::Err: std::fmt::Display,
{
    match take(entries, section, key) {
        Some(e) => parse_value(e),
        None => Err(HarnessError::Config {
            line: 0,
            message: format!("missing required key `{key}` in section [{section}]"),
        }),
    }
}

fn optional<T: std::str::FromStr>(
    entries: &[Entry],
    section: &str,
    key: &str,
) -> Result<Option<T>, HarnessError>
where
    T::Err: std::fmt::Display,
{
    match take(entries, section, key) {
        Some(e) => parse_value(e).map(Some),
        None => Ok(None),
    }
}

/// Parse one of the two profile shapes from its `[data]` keys.
fn parse_shape(entries: &[Entry], which: &str) -> Result<ProfileShape, HarnessError> {
    let name: Option<String> = optional(entries, "data", which)?;
    let width_key = format!("{which}_width");
    let modes_key = format!("{which}_modes");
    let width: Option<f64> = optional(entries, "data", &width_key)?;
    let modes: Option<u32> = optional(entries, "data", &modes_key)?;
    let name = name.unwrap_or_else(|| "gaussian".into());
    let line = section_line(entries, "data");
    let need_width = || {
        width.ok_or(HarnessError::Config {
            line,
            message: format!("shape `{name}` needs `{width_key}`"),
        })
    };
    let shape = match name.as_str() {
        "zero" => ProfileShape::Zero,
        "gaussian" => ProfileShape::Gaussian {
            width: width.unwrap_or(1.0),
        },
        "log_gaussian" => ProfileShape::LaplacianOfGaussian {
            width: need_width()?,
        },
        "speckled" => ProfileShape::SpeckledGaussian {
            width: need_width()?,
            modes: modes.unwrap_or(8),
        },
        other => {
            return Err(HarnessError::Config {
                line,
                message: format!(
                    "unknown shape `{other}` for `{which}` \
                     (expected zero | gaussian | log_gaussian | speckled)"
                ),
            })
        }
    };
    if matches!(shape, ProfileShape::Zero | ProfileShape::Gaussian { .. }) && modes.is_some() {
        return Err(HarnessError::Config {
            line,
            message: format!("`{modes_key}` is only meaningful for speckled shapes"),
        });
    }
    Ok(shape)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "
# end-to-end example
[grid]
nx = 32
box_length = 64.0

[run]
eps = 0.01
t_end = 20.0
dt = 0.25
record_stride = 4
nonlinear = true

[params]
n_top = 8

[data]
density = log_gaussian
density_width = 2.5
potential = speckled
potential_width = 3.0
potential_modes = 5
seed = 11

[output]
csv = out/run.csv
json = out/run.json

[fit]
column = lq
t0 = 4.0
min_exponent = -1.1
max_exponent = -0.7
";

    #[test]
    fn a_full_config_parses_with_every_field() {
        let c = parse_run_config(FULL).unwrap();
        assert_eq!(c.nx, 32);
        assert_eq!(c.box_length, 64.0);
        assert_eq!(c.grid().unwrap().nx(), 32);
        assert_eq!(c.eps, 0.01);
        assert_eq!(c.dt, 0.25);
        assert_eq!(c.record_stride, 4);
        assert!(c.nonlinear);
        assert_eq!(c.params.n_top, 8);
        assert_eq!(c.data.seed, 11);
        assert_eq!(
            c.data.density,
            ProfileShape::LaplacianOfGaussian { width: 2.5 }
        );
        assert_eq!(
            c.data.potential,
            ProfileShape::SpeckledGaussian {
                width: 3.0,
                modes: 5
            }
        );
        assert_eq!(c.csv_path.as_deref(), Some(std::path::Path::new("out/run.csv")));
        assert_eq!(c.fit.column, "lq");
        assert_eq!(c.fit_window(), (4.0, 20.0));
        assert_eq!(c.t_wrap(), 0.45 * 64.0);
        assert_eq!(c.weighted_fit_end(), 0.45 * 32.0);
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse_run_config(
            "[grid]\nnx = 16\nbox_length = 6.5\n[run]\neps = 0.02\nt_end = 1.0\n",
        )
        .unwrap();
        assert_eq!(c.dt, 0.0125);
        assert_eq!(c.record_stride, 1);
        assert!(c.nonlinear);
        assert_eq!(c.params, ParamSet::default());
        assert_eq!(c.data.density, ProfileShape::Gaussian { width: 1.0 });
        assert_eq!(c.data.amplitude, 0.02);
        assert!(c.csv_path.is_none());
        // Default window clamps to min(t_end, T_wrap). Here t_end < 5
        // leaves the default window empty; a short run without a fit is
        // legal, and an actual fit over it fails loudly at fit time.
        assert_eq!(c.fit_window(), (5.0, 1.0));
    }

    #[test]
    fn errors_carry_line_numbers_and_keys() {
        let cases: &[(&str, usize, &str)] = &[
            ("", 0, "empty configuration"),
            ("[grid]\nnx = 16\nbox_len = 1\n", 3, "box_len"),
            ("[grid]\nnx = 16\nbox_length = 64\n[run]\neps = 0.01\nt_end = 5\nx = 1\n", 7, "`x`"),
            ("[grid\nnx = 16\n", 1, "malformed section"),
            ("nx = 16\n", 1, "before any [section]"),
            ("[grid]\nnx = sixteen\n", 2, "cannot parse"),
            ("[grid]\nnx = 16\nnx = 32\n", 3, "duplicate key"),
            ("[weird]\nk = 1\n", 2, "unknown section"),
            ("[grid]\nnx 16\n", 2, "expected `key = value`"),
        ];
        for (text, want_line, want_fragment) in cases {
            let err = parse_run_config(text).unwrap_err();
            let HarnessError::Config { line, message } = &err else {
                panic!("expected config error, got {err}");
            };
            assert_eq!(line, want_line, "case {text:?}: {message}");
            assert!(
                message.contains(want_fragment),
                "case {text:?}: message `{message}` missing `{want_fragment}`"
            );
        }
    }

    #[test]
    fn missing_required_keys_and_bad_numbers_are_refused() {
        let err = parse_run_config("[grid]\nnx = 16\nbox_length = 64\n").unwrap_err();
        assert!(err.to_string().contains("missing required key `eps`"));

        let base = "[grid]\nnx = 16\nbox_length = 64\n[run]\neps = 0.01\n";
        for (suffix, fragment) in [
            ("t_end = 0\n", "t_end must be positive"),
            ("t_end = 50\n", "exceeds the wrap horizon"),
            ("t_end = 20\ndt = -1\n", "dt must be positive"),
            ("t_end = 20\nrecord_stride = 0\n", "record_stride"),
        ] {
            let err = parse_run_config(&format!("{base}{suffix}")).unwrap_err();
            assert!(
                err.to_string().contains(fragment),
                "suffix {suffix:?}: got {err}"
            );
        }

        // ParamSet ordering violations surface with the constraint text.
        let err = parse_run_config(&format!(
            "{base}t_end = 20\n[params]\nn_mid = 9\n"
        ))
        .unwrap_err();
        assert!(err.to_string().contains("N1 < N' < N"), "got {err}");
    }

    #[test]
    fn serde_round_trip_preserves_the_config() {
        let c = parse_run_config(FULL).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
