//! The rescaled electron Euler-Poisson system and its diagonalization.
//!
//! In rescaled variables the system reads
//!
//! ```text
//!   dt u + div v + div(u v) = 0
//!   dt v + grad u + grad(u^2/2 + |v|^2/2) = grad psi
//!   Lap psi = u
//! ```
//!
//! with `u` the density perturbation (physical density `1 + u`), `v` an
//! irrotational mean-zero velocity field `v = grad phi1`, and `psi` the
//! electrostatic potential determined by `u`. Charge neutrality pins the
//! density mean to zero. Combining the pair into the complex scalar
//!
//! ```text
//!   h = (<D>/|D|) u + i (D/|D|) . v = (<D>/|D|) u - i |D| phi1
//! ```
//!
//! turns the system into a single Klein-Gordon flow
//!
//! ```text
//!   dt h = i <D> h + N(h),
//!   N(h) = -(<D> D/|D|) . (u v) + (i/2) |D| (u^2 + |v|^2),
//! ```
//!
//! where `<D> = sqrt(1 - Lap)` and `D/|D|` is the Riesz vector. The state
//! is recovered from `h` through `u = (|D|/<D>) h1`, `v = -(D/|D|) h2`
//! with `h1, h2` the real and imaginary parts of `h` taken as real fields
//! (Hermitian and anti-Hermitian coefficient parts).
//!
//! This module owns the fluid state and its invariant checks, the Poisson
//! solve, the change of variables and its inverse, the quadratic
//! nonlinearity `N`, a residual check of the equivalent quasilinear
//! Klein-Gordon form, and initial-data synthesis. Everything is pure:
//! states are immutable and operations return new fields.
//!
//! A note on the underlying physical model: eliminating constants leaves a
//! one-parameter family of equivalent rescalings, and published statements
//! of the sound speed (`c0 = sqrt(3) n0` with background density `n0 = 1/3`
//! versus unit wave speed) are consistent only when read as `c0 =
//! sqrt(3 n0)`. This crate adopts the rescaled system above as ground
//! truth, so none of its numerics depend on how that constant is spelled.

mod data;
mod kg;

pub use data::{
    make_initial_data, xnorm_components, InitialDataReport, InitialDataSpec, ProfileShape,
    XNormComponents, BOUNDARY_MASS_LIMIT,
};
pub use kg::kg_residual;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{
    apply_multiplier, dealiased_product, derivative, MultiplierSpec, SpectralError, SpectralField,
};

/// Mean coefficients (density and velocity) must vanish to this tolerance,
/// relative to the field's L2 norm.
pub const NEUTRALITY_REL_TOL: f64 = 1e-11;

/// Curl of the velocity must vanish to this tolerance relative to `||v||_2`.
pub const CURL_REL_TOL: f64 = 1e-10;

/// Everything that can go wrong while building or transforming states.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("spectral operation failed: {0}")]
    Spectral(#[from] SpectralError),
    #[error("{field} must be a real field")]
    ComplexField { field: &'static str },
    #[error("charge neutrality violated: |mean| = {mean:.3e} exceeds {limit:.3e}")]
    NeutralityViolation { mean: f64, limit: f64 },
    #[error("velocity field is rotational: relative curl {rel:.3e}")]
    RotationalVelocity { rel: f64 },
    #[error("density leaves the positive regime: min(1 + u) = {min:.3e}")]
    PositivityLost { min: f64 },
    #[error("parameter set violates `{constraint}`")]
    BadParamSet { constraint: &'static str },
    #[error("Klein-Gordon residual needs at least 5 snapshots, got {got}")]
    TooFewSnapshots { got: usize },
    #[error("snapshot spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
    #[error("initial-data amplitude must be finite and nonnegative, got {0}")]
    BadAmplitude(f64),
    #[error(
        "{which} profile puts {fraction:.2}% of its mass in the outer boundary annulus (limit {limit:.2}%)"
    )]
    ProfileTouchesBoundary {
        which: &'static str,
        fraction: f64,
        limit: f64,
    },
    #[error("profile shape parameter invalid: {0}")]
    BadProfileShape(&'static str),
}

/// Relative size of a mean coefficient against the field's L2 norm.
/// Zero fields pass: their mean is exactly zero.
fn mean_violation(f: &SpectralField) -> Option<f64> {
    let mean = f.zero_mode().norm();
    let limit = NEUTRALITY_REL_TOL * (1.0 + f.l2_norm());
    (mean > limit).then_some(mean)
}

/// Fluid state of the rescaled system on one grid. All fields are real;
/// `psi` is derived from `u` at construction and kept consistent by
/// immutability.
#[derive(Clone, Debug)]
pub struct FluidState {
    u: SpectralField,
    v1: SpectralField,
    v2: SpectralField,
    psi: SpectralField,
}

impl FluidState {
    /// Validate the state invariants and derive the potential.
    ///
    /// Checks, in order: matching grids, real fields, mean-zero density
    /// (charge neutrality), mean-zero velocity (so `v = grad phi1` is
    /// representable on the torus), irrotationality relative to `||v||_2`,
    /// and pointwise positivity of the physical density `1 + u`.
    pub fn new(
        u: SpectralField,
        v1: SpectralField,
        v2: SpectralField,
    ) -> Result<Self, ModelError> {
        for (f, name) in [(&u, "u"), (&v1, "v1"), (&v2, "v2")] {
            if !f.is_real() {
                return Err(ModelError::ComplexField { field: name });
            }
        }
        // Grid agreement is checked by the first pairwise operation below.
        let v_l2 = (v1.l2_norm().powi(2) + v2.l2_norm().powi(2)).sqrt();
        for f in [&u, &v1, &v2] {
            if let Some(mean) = mean_violation(f) {
                return Err(ModelError::NeutralityViolation {
                    mean,
                    limit: NEUTRALITY_REL_TOL * (1.0 + f.l2_norm()),
                });
            }
        }
        let curl = derivative(&v2, 0)?.sub(&derivative(&v1, 1)?)?;
        let curl_l2 = curl.l2_norm();
        if curl_l2 > CURL_REL_TOL * v_l2 && v_l2 > 0.0 {
            return Err(ModelError::RotationalVelocity {
                rel: curl_l2 / v_l2,
            });
        }
        let min_density = u
            .to_physical_real()?
            .iter()
            .fold(f64::INFINITY, |m, &s| m.min(1.0 + s));
        if !(min_density > 0.0) {
            return Err(ModelError::PositivityLost { min: min_density });
        }
        let psi = poisson_solve(&u)?;
        Ok(FluidState { u, v1, v2, psi })
    }

    /// Density perturbation.
    pub fn u(&self) -> &SpectralField {
        &self.u
    }

    /// First velocity component.
    pub fn v1(&self) -> &SpectralField {
        &self.v1
    }

    /// Second velocity component.
    pub fn v2(&self) -> &SpectralField {
        &self.v2
    }

    /// Electrostatic potential solving `Lap psi = u`.
    pub fn psi(&self) -> &SpectralField {
        &self.psi
    }
}

/// The diagonalized variable `h` together with its timestamp.
#[derive(Clone, Debug)]
pub struct DiagonalState {
    h: SpectralField,
    t: f64,
}

impl DiagonalState {
    /// Wrap an `h` field; the zero mode must vanish (h carries a factor of
    /// `1/|D|` acting on mean-zero data in both parts).
    pub fn new(h: SpectralField, t: f64) -> Result<Self, ModelError> {
        if let Some(mean) = mean_violation(&h) {
            return Err(ModelError::NeutralityViolation {
                mean,
                limit: NEUTRALITY_REL_TOL * (1.0 + h.l2_norm()),
            });
        }
        Ok(DiagonalState { h, t })
    }

    /// The complex scalar field.
    pub fn h(&self) -> &SpectralField {
        &self.h
    }

    /// Timestamp of the state.
    pub fn t(&self) -> f64 {
        self.t
    }
}

/// Regularity and decay parameters shared by the norms and the harness:
/// a top Sobolev index `N`, an intermediate index `N'`, a low index `N1`,
/// the growth allowance `delta1` for the top norm, the splitting exponent
/// `delta2`, the weighted-norm offset `eps1`, and the derived Lebesgue
/// exponent `q = N1/eps1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    /// Top Sobolev index `N`.
    pub n_top: u32,
    /// Intermediate Sobolev index `N'`.
    pub n_mid: u32,
    /// Low index `N1` entering `q = N1/eps1`.
    pub n_one: u32,
    /// Allowed growth exponent of the top Sobolev norm.
    pub delta1: f64,
    /// Splitting exponent; must dominate `delta1 * n_one` and `eps1 * n_one`.
    pub delta2: f64,
    /// Offset of the weighted profile exponent `2 + eps1`.
    pub eps1: f64,
}

impl ParamSet {
    /// Validate the ordering constraints
    /// `N1 < N' < N`, `eps1 < delta2/N1 < delta2 < 1`, `delta1 < delta2/N1`.
    pub fn new(
        n_top: u32,
        n_mid: u32,
        n_one: u32,
        delta1: f64,
        delta2: f64,
        eps1: f64,
    ) -> Result<Self, ModelError> {
        let p = ParamSet {
            n_top,
            n_mid,
            n_one,
            delta1,
            delta2,
            eps1,
        };
        p.validate()?;
        Ok(p)
    }

    /// Re-check the invariants (useful after deserializing a config).
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |constraint| Err(ModelError::BadParamSet { constraint });
        if !(self.n_one < self.n_mid && self.n_mid < self.n_top) {
            return bad("N1 < N' < N");
        }
        if self.n_one == 0 {
            return bad("N1 >= 1");
        }
        let ratio = self.delta2 / self.n_one as f64;
        if !(self.eps1 > 0.0 && self.eps1 < ratio) {
            return bad("0 < eps1 < delta2/N1");
        }
        if !(self.delta2 < 1.0 && ratio < self.delta2) {
            return bad("delta2/N1 < delta2 < 1");
        }
        if !(self.delta1 > 0.0 && self.delta1 < ratio) {
            return bad("0 < delta1 < delta2/N1");
        }
        Ok(())
    }

    /// The Lebesgue exponent `q = N1/eps1` (exactly this quotient).
    pub fn q(&self) -> f64 {
        self.n_one as f64 / self.eps1
    }

    /// Exponent of the weighted profile norm, `2 + eps1`.
    pub fn weighted_exponent(&self) -> f64 {
        2.0 + self.eps1
    }
}

impl Default for ParamSet {
    /// Desk-scale defaults: `N=8, N'=4, N1=2, delta1=0.05, delta2=0.4,
    /// eps1=0.1`, hence `q = 20`. These satisfy the ordering constraints
    /// while keeping every norm computable on modest grids.
    fn default() -> Self {
        ParamSet::new(8, 4, 2, 0.05, 0.4, 0.1).expect("desk-scale defaults are admissible")
    }
}

/// Solve `Lap psi = u` for a mean-zero source: `psi_hat = -u_hat/|xi|^2`
/// away from the zero mode, `psi_hat(0) = 0`.
pub fn poisson_solve(u: &SpectralField) -> Result<SpectralField, ModelError> {
    if let Some(mean) = mean_violation(u) {
        return Err(ModelError::NeutralityViolation {
            mean,
            limit: NEUTRALITY_REL_TOL * (1.0 + u.l2_norm()),
        });
    }
    Ok(apply_multiplier(&MultiplierSpec::InverseLaplacian, u)?)
}

/// Diagonalize a fluid state: `h = (<D>/|D|) u + i (D/|D|) . v`.
pub fn diagonalize(s: &FluidState, t: f64) -> Result<DiagonalState, ModelError> {
    let a = apply_multiplier(
        &MultiplierSpec::BracketPower(1.0),
        &apply_multiplier(&MultiplierSpec::AbsGradPower(-1.0), &s.u)?,
    )?;
    let b = apply_multiplier(&MultiplierSpec::riesz(0), &s.v1)?
        .add(&apply_multiplier(&MultiplierSpec::riesz(1), &s.v2)?)?;
    let h = a.linear_comb(Complex64::ONE, &b, Complex64::I)?;
    DiagonalState::new(h, t)
}

/// Split `h` into its Hermitian and anti-Hermitian coefficient parts,
/// i.e. the real fields `h1 = Re h` and `h2 = Im h`.
fn real_imag_parts(h: &SpectralField) -> Result<(SpectralField, SpectralField), ModelError> {
    let grid = h.grid();
    let n = grid.len();
    let mut c1 = vec![Complex64::ZERO; n];
    let mut c2 = vec![Complex64::ZERO; n];
    for (ix, iy) in grid.positions() {
        let idx = grid.index(ix, iy);
        let (mx, my) = grid.neg_index(ix, iy);
        let fwd = h.coeff(ix, iy);
        let mirror = h.coeff(mx, my).conj();
        c1[idx] = 0.5 * (fwd + mirror);
        c2[idx] = (fwd - mirror) / Complex64::new(0.0, 2.0);
    }
    let h1 = SpectralField::from_coeffs(grid, c1, true)?;
    let h2 = SpectralField::from_coeffs(grid, c2, true)?;
    Ok((h1, h2))
}

/// Recover the raw `(u, v1, v2)` triple from `h` without state validation.
pub(crate) fn recover_fields(
    h: &SpectralField,
) -> Result<(SpectralField, SpectralField, SpectralField), ModelError> {
    let (h1, h2) = real_imag_parts(h)?;
    let u = apply_multiplier(
        &MultiplierSpec::BracketPower(-1.0),
        &apply_multiplier(&MultiplierSpec::AbsGradPower(1.0), &h1)?,
    )?;
    let minus_one = -Complex64::ONE;
    let v1 = apply_multiplier(&MultiplierSpec::riesz(0), &h2)?.scale(minus_one);
    let v2 = apply_multiplier(&MultiplierSpec::riesz(1), &h2)?.scale(minus_one);
    Ok((u, v1, v2))
}

/// Invert the diagonalization: `u = (|D|/<D>) h1`, `v = -(D/|D|) h2`.
/// The result is validated as a full fluid state (including positivity),
/// so blow-up-adjacent states are rejected rather than silently returned.
pub fn undiagonalize(d: &DiagonalState) -> Result<FluidState, ModelError> {
    let (u, v1, v2) = recover_fields(&d.h)?;
    FluidState::new(u, v1, v2)
}

/// The quadratic nonlinearity of the diagonalized flow,
/// `N(h) = -(<D> D/|D|).(u v) + (i/2) |D| (u^2 + |v|^2)`,
/// with all pointwise products dealiased by the 2/3 rule.
///
/// Every term carries a `|D|` or Riesz factor, so the output zero mode is
/// exactly zero and neutrality is conserved structurally under the flow.
pub fn nonlinearity(d: &DiagonalState) -> Result<SpectralField, ModelError> {
    let (u, v1, v2) = recover_fields(&d.h)?;
    let p1 = dealiased_product(&u, &v1)?;
    let p2 = dealiased_product(&u, &v2)?;
    let riesz_div = apply_multiplier(&MultiplierSpec::riesz(0), &p1)?
        .add(&apply_multiplier(&MultiplierSpec::riesz(1), &p2)?)?;
    let transport = apply_multiplier(&MultiplierSpec::BracketPower(1.0), &riesz_div)?;
    let squares = dealiased_product(&u, &u)?
        .add(&dealiased_product(&v1, &v1)?)?
        .add(&dealiased_product(&v2, &v2)?)?;
    let pressure = apply_multiplier(&MultiplierSpec::AbsGradPower(1.0), &squares)?;
    Ok(transport.linear_comb(-Complex64::ONE, &pressure, Complex64::new(0.0, 0.5))?)
}
