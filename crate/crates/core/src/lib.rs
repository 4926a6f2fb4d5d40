//! Pseudospectral toolkit for the two-dimensional electron Euler-Poisson
//! system in its diagonalized Klein-Gordon form.
//!
//! The library simulates the rescaled irrotational Euler-Poisson equations
//! on a periodic box, rewrites the flow as a single complex Klein-Gordon
//! variable `h` with dispersion `exp(it<D>)`, and provides the bilinear and
//! trilinear machinery needed to check, numerically and at desk scale, the
//! structural facts a small-data decay argument rests on: dispersive decay
//! of the linear group, a normal-form decomposition of the Duhamel profile
//! into boundary and cubic parts, lower bounds for the quadratic and cubic
//! oscillation phases, and scattering of the profile in Sobolev norms.
//!
//! Modules mirror the pipeline:
//!
//! * [`spectral`]: periodic grids, Fourier-side fields, multipliers,
//!   Littlewood-Paley projections, norms, and dispersive kernel bounds.
//! * [`model`]: fluid state, Poisson coupling, the diagonalizing change of
//!   variables, the quadratic nonlinearity, and initial data synthesis.
//! * [`integrator`]: integrating-factor RK4 on the profile `f = e^{-it<D>}h`
//!   and trajectory recording/serialization.
//! * [`pseudoproduct`]: Fourier-side bilinear and trilinear operators with
//!   explicit symbols, plus the catalogued quadratic symbol family.
//! * [`phase_geometry`]: sign combinations, phase functions, their gradient
//!   factorizations, and scans certifying the lower bounds used to divide
//!   by phases.
//! * [`normal_form`]: the decomposition of the profile into transformed
//!   data, a quadratic boundary term, and an integrated cubic term.
//! * [`harness`]: norm bookkeeping, decay-rate fits, run configuration,
//!   and the drivers behind the command-line interface.

// Guards of the form `if !(x > 0.0)` are deliberate: they reject NaN along
// with the out-of-range sign, which `if x <= 0.0` would silently admit.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod harness;
pub mod integrator;
pub mod model;
pub mod normal_form;
pub mod phase_geometry;
pub mod pseudoproduct;
pub mod spectral;
