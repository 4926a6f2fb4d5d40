//! Scalar Fourier multipliers: Riesz transforms, fractional derivatives,
//! Littlewood-Paley projections, the Klein-Gordon semigroup, and the
//! inverse Laplacian.
//!
//! Symbols that are singular at `xi = 0` (Riesz, negative powers of
//! `|grad|`, the inverse Laplacian) evaluate to exactly 0 at the zero mode:
//! admissible states are mean-free, so the zero mode never carries content,
//! and the convention avoids NaN without changing any admissible field.

use super::{GridSpec, SpectralError, SpectralField};
use num_complex::Complex64;
use std::sync::Arc;

/// Kinds of Littlewood-Paley projection.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LpKind {
    /// Annulus piece `P_N = P_{<=N} - P_{<=N/2}`.
    At,
    /// Low-pass `P_{<=N}`.
    Leq,
    /// High-pass `1 - P_{<=N}`.
    Gt,
    /// Fattened annulus `P_{N/2} + P_N + P_{2N}`.
    Fat,
}

/// A scalar symbol `m(xi)` applied coefficient-wise.
#[derive(Clone)]
pub enum MultiplierSpec {
    /// Riesz transform component: `i xi_j / |xi|`, 0 at the zero mode.
    Riesz(usize),
    /// `|xi|^s`; 0 at the zero mode for every `s != 0`.
    AbsGradPower(f64),
    /// Japanese-bracket power `<xi>^s`.
    BracketPower(f64),
    /// Littlewood-Paley projection at scale `N`.
    Lp(LpKind, f64),
    /// Klein-Gordon semigroup `exp(i t <xi>)`.
    KgSemigroup(f64),
    /// `-1/|xi|^2`, 0 at the zero mode.
    InverseLaplacian,
    /// Tabulated lattice values; `hermitian_even` declares that the table
    /// preserves Hermitian symmetry (trusted, used for the is_real flag).
    Custom {
        values: Arc<Vec<Complex64>>,
        hermitian_even: bool,
    },
}

impl MultiplierSpec {
    /// Riesz component for axis 0 or 1.
    pub fn riesz(axis: usize) -> Self {
        assert!(axis < 2, "Riesz axis must be 0 or 1");
        MultiplierSpec::Riesz(axis)
    }

    /// Symbol value at lattice position `(ix, iy)`.
    pub fn eval(&self, grid: GridSpec, ix: usize, iy: usize) -> Complex64 {
        let (x1, x2) = grid.xi(ix, iy);
        match self {
            MultiplierSpec::Riesz(axis) => {
                // The Nyquist line of the component axis has no mirror
                // frequency, so an odd symbol cannot keep real fields real
                // there; the symbol is zeroed on it (band-limited fields
                // never populate that line).
                let (j1, j2) = grid.freq_int(ix, iy);
                let unpaired = if *axis == 0 {
                    2 * j1.unsigned_abs() as usize == grid.nx()
                } else {
                    2 * j2.unsigned_abs() as usize == grid.ny()
                };
                let r = (x1 * x1 + x2 * x2).sqrt();
                if r == 0.0 || unpaired {
                    Complex64::ZERO
                } else {
                    let component = if *axis == 0 { x1 } else { x2 };
                    Complex64::new(0.0, component / r)
                }
            }
            MultiplierSpec::AbsGradPower(s) => {
                if *s == 0.0 {
                    return Complex64::ONE;
                }
                let r2 = x1 * x1 + x2 * x2;
                if r2 == 0.0 {
                    Complex64::ZERO
                } else {
                    Complex64::new(r2.powf(s / 2.0), 0.0)
                }
            }
            MultiplierSpec::BracketPower(s) => {
                Complex64::new((1.0 + x1 * x1 + x2 * x2).powf(s / 2.0), 0.0)
            }
            MultiplierSpec::Lp(kind, n) => {
                let r = (x1 * x1 + x2 * x2).sqrt();
                Complex64::new(lp_symbol(*kind, *n, r), 0.0)
            }
            MultiplierSpec::KgSemigroup(t) => {
                Complex64::cis(t * (1.0 + x1 * x1 + x2 * x2).sqrt())
            }
            MultiplierSpec::InverseLaplacian => {
                let r2 = x1 * x1 + x2 * x2;
                if r2 == 0.0 {
                    Complex64::ZERO
                } else {
                    Complex64::new(-1.0 / r2, 0.0)
                }
            }
            MultiplierSpec::Custom { values, .. } => values[grid.index(ix, iy)],
        }
    }

    /// Whether applying this symbol keeps real fields real: true for real
    /// even symbols and for the purely imaginary odd Riesz symbol.
    pub fn preserves_real(&self) -> bool {
        match self {
            MultiplierSpec::Riesz(_) => true,
            MultiplierSpec::AbsGradPower(_) => true,
            MultiplierSpec::BracketPower(_) => true,
            MultiplierSpec::Lp(..) => true,
            MultiplierSpec::KgSemigroup(t) => *t == 0.0,
            MultiplierSpec::InverseLaplacian => true,
            MultiplierSpec::Custom { hermitian_even, .. } => *hermitian_even,
        }
    }

    fn validate(&self, grid: GridSpec) -> Result<(), SpectralError> {
        match self {
            MultiplierSpec::Lp(_, n) if !(n.is_finite() && *n > 0.0) => {
                Err(SpectralError::BadLpScale(*n))
            }
            MultiplierSpec::Custom { values, .. } if values.len() != grid.len() => {
                Err(SpectralError::MultiplierTableMismatch {
                    got: values.len(),
                    want: grid.len(),
                })
            }
            _ => Ok(()),
        }
    }
}

/// The radial plateau bump: 1 on `r <= 1`, 0 on `r >= 25/24`, a cubic
/// smoothstep on the transition window. Tests depend only on the plateau
/// and support, not the transition shape.
pub fn bump(r: f64) -> f64 {
    const EDGE: f64 = 25.0 / 24.0;
    if r <= 1.0 {
        1.0
    } else if r >= EDGE {
        0.0
    } else {
        let s = (r - 1.0) / (EDGE - 1.0);
        1.0 - s * s * (3.0 - 2.0 * s)
    }
}

fn lp_symbol(kind: LpKind, n: f64, r: f64) -> f64 {
    match kind {
        LpKind::Leq => bump(r / n),
        LpKind::At => bump(r / n) - bump(2.0 * r / n),
        LpKind::Gt => 1.0 - bump(r / n),
        LpKind::Fat => {
            lp_symbol(LpKind::At, n / 2.0, r)
                + lp_symbol(LpKind::At, n, r)
                + lp_symbol(LpKind::At, 2.0 * n, r)
        }
    }
}

/// Apply a multiplier coefficient-wise.
pub fn apply_multiplier(
    m: &MultiplierSpec,
    f: &SpectralField,
) -> Result<SpectralField, SpectralError> {
    let grid = f.grid();
    m.validate(grid)?;
    Ok(f.map_coeffs(m.preserves_real(), |ix, iy, c| c * m.eval(grid, ix, iy)))
}

/// Partial derivative along one axis, symbol `i xi_j`. Implemented as the
/// composition `|grad| RieszComponent_j`, which is exact on the lattice and
/// inherits the Riesz convention of vanishing on the unpaired Nyquist line.
pub fn derivative(f: &SpectralField, axis: usize) -> Result<SpectralField, SpectralError> {
    let r = apply_multiplier(&MultiplierSpec::riesz(axis), f)?;
    apply_multiplier(&MultiplierSpec::AbsGradPower(1.0), &r)
}

/// Littlewood-Paley projection of `f` at scale `n`.
pub fn lp_project(
    f: &SpectralField,
    n: f64,
    kind: LpKind,
) -> Result<SpectralField, SpectralError> {
    apply_multiplier(&MultiplierSpec::Lp(kind, n), f)
}
