//! Residual of the quasilinear Klein-Gordon form of the system.
//!
//! Eliminating the velocity from the rescaled pair yields the scalar
//! second-order equation
//!
//! ```text
//!   (dtt + 1 - Lap) u = Lap(u^2/2 + |v|^2/2) - dt div(u v),
//! ```
//!
//! which an exact solution of the first-order system satisfies
//! identically. Measuring its residual on a recorded trajectory is an
//! end-to-end consistency check of the solver, the diagonalization, and
//! the nonlinearity at once: time derivatives are approximated by
//! 4th-order central differences and all spatial operators are applied
//! spectrally, so the residual of an integrated trajectory is expected to
//! scale like `O(dt^4 + amplitude^3)` (stencil error plus the aliasing
//! band discarded by the 2/3 rule).

use num_complex::Complex64;

use crate::spectral::{
    apply_multiplier, dealiased_product, derivative, MultiplierSpec, SpectralField,
};

use super::{FluidState, ModelError};

/// 4th-order central first-derivative weights on offsets -2..=2, times 12.
const D1_WEIGHTS: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
/// 4th-order central second-derivative weights on offsets -2..=2, times 12.
const D2_WEIGHTS: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];

/// The dealiased flux divergence `div(u v)` of one snapshot.
fn flux_divergence(s: &FluidState) -> Result<SpectralField, ModelError> {
    let p1 = dealiased_product(s.u(), s.v1())?;
    let p2 = dealiased_product(s.u(), s.v2())?;
    Ok(derivative(&p1, 0)?.add(&derivative(&p2, 1)?)?)
}

/// Centered 5-point stencil combination `sum_k w[k] field_k / (12 dt^pow)`.
fn stencil(fields: &[SpectralField; 5], weights: &[f64; 5], dt: f64, pow: i32) -> SpectralField {
    let mut acc = fields[0].scale(Complex64::new(weights[0], 0.0));
    for k in 1..5 {
        acc = acc
            .linear_comb(Complex64::ONE, &fields[k], Complex64::new(weights[k], 0.0))
            .expect("stencil fields share one grid");
    }
    acc.scale(Complex64::new(1.0 / (12.0 * dt.powi(pow)), 0.0))
}

/// Relative residual of the quasilinear Klein-Gordon equation at the
/// central snapshot of a uniformly spaced window.
///
/// Requires at least 5 snapshots; the stencil is centered at index
/// `len/2`. The residual is normalized by the sum of the L2 norms of the
/// equation's constituent terms, so a vanishing trajectory reports 0.
pub fn kg_residual(states: &[FluidState], dt: f64) -> Result<f64, ModelError> {
    if states.len() < 5 {
        return Err(ModelError::TooFewSnapshots { got: states.len() });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ModelError::BadSpacing(dt));
    }
    let c = states.len() / 2;
    let window: [&FluidState; 5] = [
        &states[c - 2],
        &states[c - 1],
        &states[c],
        &states[c + 1],
        &states[c + 2],
    ];

    let u_fields: [SpectralField; 5] = std::array::from_fn(|k| window[k].u().clone());
    let u_tt = stencil(&u_fields, &D2_WEIGHTS, dt, 2);

    let flux: [SpectralField; 5] = {
        let mut out: Vec<SpectralField> = Vec::with_capacity(5);
        for s in window {
            out.push(flux_divergence(s)?);
        }
        out.try_into().expect("exactly 5 snapshots")
    };
    let flux_t = stencil(&flux, &D1_WEIGHTS, dt, 1);

    let s0 = window[2];
    let lap = |f: &SpectralField| -> Result<SpectralField, ModelError> {
        Ok(apply_multiplier(&MultiplierSpec::AbsGradPower(2.0), f)?.scale(-Complex64::ONE))
    };
    let lap_u = lap(s0.u())?;
    let squares = dealiased_product(s0.u(), s0.u())?
        .add(&dealiased_product(s0.v1(), s0.v1())?)?
        .add(&dealiased_product(s0.v2(), s0.v2())?)?;
    let pressure = lap(&squares)?.scale(Complex64::new(0.5, 0.0));

    // (dtt + 1 - Lap) u - Lap(u^2 + |v|^2)/2 + dt div(u v) = 0.
    let residual = u_tt
        .add(s0.u())?
        .sub(&lap_u)?
        .sub(&pressure)?
        .add(&flux_t)?
        .l2_norm();
    let scale =
        u_tt.l2_norm() + s0.u().l2_norm() + lap_u.l2_norm() + pressure.l2_norm() + flux_t.l2_norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(residual / scale)
}
