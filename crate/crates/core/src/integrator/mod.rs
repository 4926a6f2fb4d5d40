//! Time integration of the profile equation.
//!
//! The diagonalized flow `dt h = i<D> h + N(h)` is integrated through the
//! profile `f(t) = e^{-it<D>} h(t)`, which satisfies
//!
//! ```text
//!   dt f = e^{-it<D>} N(e^{it<D>} f) =: G(t, f).
//! ```
//!
//! The oscillatory linear part is absorbed exactly by the semigroup
//! conjugation, so a classical 4-stage Runge-Kutta step on `f`
//! (integrating-factor RK4) is spectrally stable: `|e^{it<xi>}| = 1` for
//! every mode, and the step size is limited by the nonlinearity alone.
//! With `N` disabled the scheme is exact and `f` is constant to the bit.
//!
//! Runs live on a periodic box standing in for the plane, which is only
//! honest while no wave has crossed the boundary: the Klein-Gordon group
//! speed `|xi|/<xi>` is below 1, so a run is restricted to the wrap-around
//! horizon `T <= 0.45 L`.
//!
//! Recorded trajectories feed the normal-form decomposition and the decay
//! harness; [`io`] serializes them to a little-endian binary format for
//! reuse across processes.

mod diagnostics;
mod io;

pub use diagnostics::{
    energy_growth_check, partial_t_f_decay, scattering_check, EnergyGrowthEntry,
    EnergyGrowthReport, ScatteringReport,
};
pub use io::{load_trajectory, save_trajectory};

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{nonlinearity, DiagonalState, ModelError};
use crate::spectral::{apply_multiplier, MultiplierSpec, SpectralError, SpectralField};

/// Default base step for desk-scale runs.
pub const DEFAULT_DT: f64 = 0.05;

/// Default number of steps between recorded snapshots.
pub const DEFAULT_RECORD_STRIDE: usize = 10;

/// Fraction of the box length a run may last before wrap-around:
/// group speed is below one, and 0.45 leaves margin for tail spreading.
pub const WRAP_FRACTION: f64 = 0.45;

/// Integration failures and trajectory-handling failures.
#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("model operation failed: {0}")]
    Model(#[from] ModelError),
    #[error("spectral operation failed: {0}")]
    Spectral(#[from] SpectralError),
    #[error("step size must be finite and nonzero, got {0}")]
    BadStep(f64),
    #[error("record stride must be at least 1")]
    BadStride,
    #[error("blow-up detected at t = {t:.6}: last finite ||h||_2 = {last_l2:.6e}")]
    BlowUp { t: f64, last_l2: f64 },
    #[error(
        "final time {t_end:.3} exceeds the wrap-around horizon {horizon:.3} of the L = {box_length:.1} box"
    )]
    HorizonExceeded {
        t_end: f64,
        horizon: f64,
        box_length: f64,
    },
    #[error("time span [{t0:.3}, {t_end:.3}] is not a whole number of steps of dt = {dt}")]
    NonCommensurate { t0: f64, t_end: f64, dt: f64 },
    #[error("step count {steps} is not a multiple of the record stride {stride}")]
    StrideMisaligned { steps: usize, stride: usize },
    #[error("profile zero mode must vanish: |f_hat(0)| = {mean:.3e}")]
    NonzeroMean { mean: f64 },
    #[error("diagnostic needs at least {want} snapshots, got {got}")]
    TooFewSnapshots { got: usize, want: usize },
    #[error("no recorded snapshot near t = {t}")]
    SnapshotNotFound { t: f64 },
    #[error("trajectory io failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("trajectory file malformed: {0}")]
    MalformedTrajectory(String),
}

/// The profile `f(t) = e^{-it<D>} h(t)` at one instant.
#[derive(Clone, Debug)]
pub struct Profile {
    f: SpectralField,
    t: f64,
}

impl Profile {
    /// Wrap a profile field; the zero mode must vanish.
    pub fn new(f: SpectralField, t: f64) -> Result<Self, IntegratorError> {
        let mean = f.zero_mode().norm();
        if mean > 1e-11 * (1.0 + f.l2_norm()) {
            return Err(IntegratorError::NonzeroMean { mean });
        }
        Ok(Profile { f, t })
    }

    /// Build the profile of a diagonal state: `f = e^{-it<D>} h`.
    pub fn from_state(d: &DiagonalState) -> Result<Self, IntegratorError> {
        let f = apply_multiplier(&MultiplierSpec::KgSemigroup(-d.t()), d.h())?;
        Profile::new(f, d.t())
    }

    /// Recover the diagonal state: `h = e^{it<D>} f`.
    pub fn to_state(&self) -> Result<DiagonalState, IntegratorError> {
        let h = apply_multiplier(&MultiplierSpec::KgSemigroup(self.t), &self.f)?;
        Ok(DiagonalState::new(h, self.t)?)
    }

    /// The profile field.
    pub fn f(&self) -> &SpectralField {
        &self.f
    }

    /// Timestamp.
    pub fn t(&self) -> f64 {
        self.t
    }
}

/// How to run the integrator.
#[derive(Clone, Copy, Debug)]
pub struct RunSpec {
    /// Final time; must respect the wrap-around horizon.
    pub t_end: f64,
    /// Base step.
    pub dt: f64,
    /// Record every this-many steps (the initial state is always recorded).
    pub record_stride: usize,
    /// Evaluate the nonlinearity; `false` freezes the profile (pure
    /// Klein-Gordon flow), used for calibration runs.
    pub nonlinear: bool,
}

impl RunSpec {
    /// Nonlinear run with default step and stride.
    pub fn to_time(t_end: f64) -> Self {
        RunSpec {
            t_end,
            dt: DEFAULT_DT,
            record_stride: DEFAULT_RECORD_STRIDE,
            nonlinear: true,
        }
    }
}

/// A uniformly recorded run: snapshots every `record_stride` steps of
/// size `dt`, starting at the initial state.
#[derive(Clone, Debug)]
pub struct Trajectory {
    profiles: Vec<Profile>,
    dt: f64,
    record_stride: usize,
    nonlinear: bool,
}

impl Trajectory {
    /// Assemble from parts, enforcing uniform timestamps. Used by the
    /// loader; `run` produces uniform snapshots by construction.
    pub fn from_parts(
        profiles: Vec<Profile>,
        dt: f64,
        record_stride: usize,
        nonlinear: bool,
    ) -> Result<Self, IntegratorError> {
        if profiles.is_empty() {
            return Err(IntegratorError::MalformedTrajectory(
                "trajectory has no snapshots".into(),
            ));
        }
        if record_stride == 0 {
            return Err(IntegratorError::BadStride);
        }
        let t0 = profiles[0].t();
        let spacing = dt * record_stride as f64;
        for (j, p) in profiles.iter().enumerate() {
            let want = t0 + j as f64 * spacing;
            if (p.t() - want).abs() > 1e-9 * (1.0 + want.abs()) {
                return Err(IntegratorError::MalformedTrajectory(format!(
                    "snapshot {j} at t = {} where {want} was expected",
                    p.t()
                )));
            }
        }
        Ok(Trajectory {
            profiles,
            dt,
            record_stride,
            nonlinear,
        })
    }

    /// Recorded snapshots, oldest first.
    pub fn profiles(&self) -> &[Profile] {
        &self.profiles
    }

    /// Snapshot timestamps.
    pub fn times(&self) -> Vec<f64> {
        self.profiles.iter().map(Profile::t).collect()
    }

    /// Base integration step.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Steps between snapshots.
    pub fn record_stride(&self) -> usize {
        self.record_stride
    }

    /// Time between consecutive snapshots.
    pub fn snapshot_spacing(&self) -> f64 {
        self.dt * self.record_stride as f64
    }

    /// Whether the nonlinearity was active during the run.
    pub fn nonlinear(&self) -> bool {
        self.nonlinear
    }

    /// Last recorded profile.
    pub fn last(&self) -> &Profile {
        self.profiles.last().expect("trajectories are nonempty")
    }

    /// Index of the snapshot at time `t`, if one exists.
    pub fn snapshot_at(&self, t: f64) -> Result<usize, IntegratorError> {
        let spacing = self.snapshot_spacing();
        let t0 = self.profiles[0].t();
        let idx = ((t - t0) / spacing).round();
        if idx < 0.0 || idx as usize >= self.profiles.len() {
            return Err(IntegratorError::SnapshotNotFound { t });
        }
        let j = idx as usize;
        if (self.profiles[j].t() - t).abs() > 1e-6 * (1.0 + t.abs()) {
            return Err(IntegratorError::SnapshotNotFound { t });
        }
        Ok(j)
    }
}

/// The profile vector field `G(t, f) = e^{-it<D>} N(e^{it<D>} f)`.
fn profile_rhs(f: &SpectralField, t: f64) -> Result<SpectralField, IntegratorError> {
    let h = apply_multiplier(&MultiplierSpec::KgSemigroup(t), f)?;
    let d = DiagonalState::new(h, t)?;
    let n = nonlinearity(&d)?;
    Ok(apply_multiplier(&MultiplierSpec::KgSemigroup(-t), &n)?)
}

/// Guard against non-finite fields, reporting the time reached.
fn check_finite(f: &SpectralField, t: f64, last_l2: f64) -> Result<(), IntegratorError> {
    if f.l2_norm().is_finite() {
        Ok(())
    } else {
        Err(IntegratorError::BlowUp { t, last_l2 })
    }
}

fn step_inner(p: &Profile, dt: f64, nonlinear: bool) -> Result<Profile, IntegratorError> {
    if !(dt != 0.0 && dt.is_finite()) {
        return Err(IntegratorError::BadStep(dt));
    }
    if !nonlinear {
        return Ok(Profile {
            f: p.f.clone(),
            t: p.t + dt,
        });
    }
    let last_l2 = p.f.l2_norm();
    let re = |x: f64| Complex64::new(x, 0.0);
    let half = re(0.5 * dt);

    let k1 = profile_rhs(&p.f, p.t)?;
    check_finite(&k1, p.t, last_l2)?;
    let k2 = profile_rhs(&p.f.linear_comb(Complex64::ONE, &k1, half)?, p.t + 0.5 * dt)?;
    check_finite(&k2, p.t + 0.5 * dt, last_l2)?;
    let k3 = profile_rhs(&p.f.linear_comb(Complex64::ONE, &k2, half)?, p.t + 0.5 * dt)?;
    check_finite(&k3, p.t + 0.5 * dt, last_l2)?;
    let k4 = profile_rhs(&p.f.linear_comb(Complex64::ONE, &k3, re(dt))?, p.t + dt)?;
    check_finite(&k4, p.t + dt, last_l2)?;

    let sum = k1
        .add(&k4)?
        .linear_comb(Complex64::ONE, &k2.add(&k3)?, re(2.0))?;
    let f = p.f.linear_comb(Complex64::ONE, &sum, re(dt / 6.0))?;
    check_finite(&f, p.t + dt, last_l2)?;
    Ok(Profile { f, t: p.t + dt })
}

/// One integrating-factor RK4 step of the nonlinear flow. Negative `dt`
/// steps backward (used by the time-reversal consistency check).
pub fn step(p: &Profile, dt: f64) -> Result<Profile, IntegratorError> {
    step_inner(p, dt, true)
}

/// Integrate from a diagonal state, recording every `record_stride` steps.
pub fn run(data: &DiagonalState, spec: &RunSpec) -> Result<Trajectory, IntegratorError> {
    if !(spec.dt > 0.0 && spec.dt.is_finite()) {
        return Err(IntegratorError::BadStep(spec.dt));
    }
    if spec.record_stride == 0 {
        return Err(IntegratorError::BadStride);
    }
    let box_length = data.h().grid().box_length();
    let horizon = WRAP_FRACTION * box_length;
    if spec.t_end > horizon * (1.0 + 1e-12) {
        return Err(IntegratorError::HorizonExceeded {
            t_end: spec.t_end,
            horizon,
            box_length,
        });
    }
    let t0 = data.t();
    let span = spec.t_end - t0;
    let steps_f = span / spec.dt;
    let steps = steps_f.round();
    if steps < 1.0 || (steps_f - steps).abs() > 1e-9 * steps.max(1.0) {
        return Err(IntegratorError::NonCommensurate {
            t0,
            t_end: spec.t_end,
            dt: spec.dt,
        });
    }
    let steps = steps as usize;
    if !steps.is_multiple_of(spec.record_stride) {
        return Err(IntegratorError::StrideMisaligned {
            steps,
            stride: spec.record_stride,
        });
    }

    let mut current = Profile::from_state(data)?;
    let mut profiles = Vec::with_capacity(steps / spec.record_stride + 1);
    profiles.push(current.clone());
    for k in 1..=steps {
        let mut next = step_inner(&current, spec.dt, spec.nonlinear)?;
        // Anchor the timestamp to the lattice t0 + k dt; incremental
        // addition would accumulate rounding over thousands of steps.
        next.t = t0 + k as f64 * spec.dt;
        current = next;
        if k % spec.record_stride == 0 {
            profiles.push(current.clone());
        }
    }
    Trajectory::from_parts(profiles, spec.dt, spec.record_stride, spec.nonlinear)
}
