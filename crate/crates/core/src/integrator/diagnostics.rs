//! Trajectory diagnostics: the decay of `dt f`, the energy-growth ratio,
//! and the scattering Cauchy increments.
//!
//! All three read a recorded [`Trajectory`] and return series the harness
//! fits or the acceptance gate thresholds. They are measurements, not
//! assertions: pass/fail belongs to the caller.

use serde::Serialize;

use crate::model::{nonlinearity, ParamSet};
use crate::spectral::{
    apply_multiplier, derivative, lebesgue_norm, sobolev_norm, MultiplierSpec, SpectralField,
};

use super::{IntegratorError, Trajectory};

/// Series of `|| e^{it<D>} dt f ||_{L^q}` over the recorded snapshots.
///
/// The profile equation gives `e^{it<D>} dt f = N(h)` exactly, so no
/// finite differences enter; for a linear run `dt f` vanishes identically
/// and the series is zero.
pub fn partial_t_f_decay(
    traj: &Trajectory,
    params: &ParamSet,
) -> Result<Vec<(f64, f64)>, IntegratorError> {
    if traj.profiles().len() < 5 {
        return Err(IntegratorError::TooFewSnapshots {
            got: traj.profiles().len(),
            want: 5,
        });
    }
    let q = params.q();
    let mut out = Vec::with_capacity(traj.profiles().len());
    for p in traj.profiles() {
        let value = if traj.nonlinear() {
            let n = nonlinearity(&p.to_state()?)?;
            lebesgue_norm(&n, q)?
        } else {
            0.0
        };
        out.push((p.t(), value));
    }
    Ok(out)
}

/// One snapshot of the energy-growth diagnostic.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnergyGrowthEntry {
    /// Snapshot time (interior snapshots only).
    pub t: f64,
    /// `||h||_{H^N}^2`.
    pub energy: f64,
    /// Centered-difference `d/dt ||h||_{H^N}^2`.
    pub derivative: f64,
    /// `D(t) = ||grad h||_inf + ||<D> u||_inf + ||grad v||_inf`.
    pub d_value: f64,
    /// `derivative / (d_value * energy)`.
    pub ratio: f64,
    /// `D(t) / || |D|^{1/2} <D> h ||_inf`.
    pub domination: f64,
}

/// Energy-growth diagnostic over a trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct EnergyGrowthReport {
    pub entries: Vec<EnergyGrowthEntry>,
    /// Largest `|ratio|` over the interior snapshots.
    pub max_ratio: f64,
    /// Largest domination ratio.
    pub max_domination: f64,
}

/// The inf-norm of a vector field given its components.
fn sup_magnitude(components: &[SpectralField]) -> f64 {
    let phys: Vec<Vec<num_complex::Complex64>> =
        components.iter().map(|c| c.to_physical()).collect();
    let n = phys[0].len();
    let mut sup: f64 = 0.0;
    for i in 0..n {
        let s: f64 = phys.iter().map(|p| p[i].norm_sqr()).sum();
        sup = sup.max(s.sqrt());
    }
    sup
}

/// Check the energy estimate's shape: does `d/dt ||h||_{H^N}^2` stay
/// controlled by `D(t) ||h||_{H^N}^2`, and is `D(t)` itself dominated by
/// the dispersive sup norm `|| |D|^{1/2} <D> h ||_inf`?
///
/// The time derivative uses centered differences on the snapshot spacing,
/// so the report covers the interior snapshots.
pub fn energy_growth_check(
    traj: &Trajectory,
    params: &ParamSet,
) -> Result<EnergyGrowthReport, IntegratorError> {
    let profiles = traj.profiles();
    if profiles.len() < 3 {
        return Err(IntegratorError::TooFewSnapshots {
            got: profiles.len(),
            want: 3,
        });
    }
    // The semigroup is an H^s isometry, so the energy can be read off the
    // profile without rotating back.
    let energies: Vec<f64> = profiles
        .iter()
        .map(|p| sobolev_norm(p.f(), params.n_top as f64).powi(2))
        .collect();
    let spacing = traj.snapshot_spacing();
    let mut entries = Vec::with_capacity(profiles.len().saturating_sub(2));
    let mut max_ratio: f64 = 0.0;
    let mut max_domination: f64 = 0.0;
    for j in 1..profiles.len() - 1 {
        let state = profiles[j].to_state()?;
        let h = state.h();
        // Raw field recovery: D(t) is a diagnostic, so it skips the full
        // fluid-state validation (positivity etc.).
        let (u, v1, v2) = crate::model::recover_fields(h)?;
        let grad_h = sup_magnitude(&[derivative(h, 0)?, derivative(h, 1)?]);
        let bracket_u = lebesgue_norm(
            &apply_multiplier(&MultiplierSpec::BracketPower(1.0), &u)?,
            f64::INFINITY,
        )?;
        let grad_v = sup_magnitude(&[
            derivative(&v1, 0)?,
            derivative(&v1, 1)?,
            derivative(&v2, 0)?,
            derivative(&v2, 1)?,
        ]);
        let d_value = grad_h + bracket_u + grad_v;
        let derivative_e = (energies[j + 1] - energies[j - 1]) / (2.0 * spacing);
        let denom = d_value * energies[j];
        let ratio = if denom > 0.0 { derivative_e / denom } else { 0.0 };
        let dispersive = lebesgue_norm(
            &apply_multiplier(
                &MultiplierSpec::BracketPower(1.0),
                &apply_multiplier(&MultiplierSpec::AbsGradPower(0.5), h)?,
            )?,
            f64::INFINITY,
        )?;
        let domination = if dispersive > 0.0 {
            d_value / dispersive
        } else {
            0.0
        };
        max_ratio = max_ratio.max(ratio.abs());
        max_domination = max_domination.max(domination);
        entries.push(EnergyGrowthEntry {
            t: profiles[j].t(),
            energy: energies[j],
            derivative: derivative_e,
            d_value,
            ratio,
            domination,
        });
    }
    Ok(EnergyGrowthReport {
        entries,
        max_ratio,
        max_domination,
    })
}

/// Cauchy increments of the profile in `H^{N'}` at requested times.
#[derive(Clone, Debug, Serialize)]
pub struct ScatteringReport {
    /// `(t_j, t_{j+1}, ||f(t_{j+1}) - f(t_j)||_{H^{N'}})`.
    pub increments: Vec<(f64, f64, f64)>,
    /// Whether each increment is at most 1.1x the previous one.
    pub monotone_within_slack: bool,
    /// Last increment divided by the first (0 when the first vanishes).
    pub contraction: f64,
}

/// Measure profile convergence: if `f(t)` has a limit in `H^{N'}`, the
/// increments between successive checkpoint times must shrink.
pub fn scattering_check(
    traj: &Trajectory,
    params: &ParamSet,
    checkpoints: &[f64],
) -> Result<ScatteringReport, IntegratorError> {
    if checkpoints.len() < 3 {
        return Err(IntegratorError::TooFewSnapshots {
            got: checkpoints.len(),
            want: 3,
        });
    }
    let mut increments = Vec::with_capacity(checkpoints.len() - 1);
    for pair in checkpoints.windows(2) {
        let a = traj.snapshot_at(pair[0])?;
        let b = traj.snapshot_at(pair[1])?;
        let diff = traj.profiles()[b].f().sub(traj.profiles()[a].f())?;
        increments.push((
            pair[0],
            pair[1],
            sobolev_norm(&diff, params.n_mid as f64),
        ));
    }
    let monotone = increments
        .windows(2)
        .all(|w| w[1].2 <= 1.1 * w[0].2);
    let first = increments[0].2;
    let last = increments[increments.len() - 1].2;
    let contraction = if first > 0.0 { last / first } else { 0.0 };
    Ok(ScatteringReport {
        increments,
        monotone_within_slack: monotone,
        contraction,
    })
}
