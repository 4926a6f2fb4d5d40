//! The explicit symbol catalogue of the quadratic interaction.
//!
//! Expanding the nonlinearity of the diagonalized flow over the Hermitian
//! and anti-Hermitian parts of `h` turns the Duhamel integrand for the
//! profile into four oscillatory bilinear terms, one per sign choice
//! `(e2, e3)` of the quadratic phase
//!
//! ```text
//! phi(xi, eta) = <xi> + e2 <eta> + e3 <xi - eta>.
//! ```
//!
//! Each term carries the kernel
//!
//! ```text
//! m0(xi, eta) = -e3 * psi_a + psi_b + e2 e3 * psi_c,
//!
//! psi_a = (i/4) <xi> (|eta|/<eta>) (xi . (xi-eta)) / (|xi| |xi-eta|),
//! psi_b = (i/8) |xi| |eta| |xi-eta| / (<eta> <xi-eta>),
//! psi_c = (i/8) |xi| (eta . (xi-eta)) / (|eta| |xi-eta|),
//! ```
//!
//! and a conjugation pattern: the factor at `eta` enters as the plain
//! profile when `e2` is minus and as the reflected conjugate
//! `zeta -> conj(F(-zeta))` when `e2` is plus, and likewise at `xi - eta`
//! with `e3`. The `psi_a` family descends from the transport part of the
//! nonlinearity (the `|eta|/<eta>` weight rides on the density factor and
//! the directional factor on the velocity), `psi_b` from the squared
//! density, and `psi_c` from the squared velocity.
//!
//! Each kernel is singular only through the directional factors; every
//! value is set to 0 whenever any of `xi`, `eta`, `xi - eta` vanishes.
//! Admissible fields are mean-free, so the regularized points never
//! multiply nonzero data.
//!
//! Dividing a kernel by its phase and chaining a second kernel yields the
//! cubic symbols `m1(xi, eta, sigma) = m0(xi, eta) m0(eta, sigma) /
//! phi(xi, eta)` produced by integrating the Duhamel integral by parts in
//! time; the certified phase lower bound keeps the divisor away from 0.

use super::{
    BilinearSymbol, PointFn, SeparableTerm, TrilinearFactors, TrilinearSymbol,
};
use crate::phase_geometry::{QuadCombo, Sign, Vec2};
use crate::spectral::SpectralField;
use num_complex::Complex64;
use std::sync::Arc;

/// Pointwise bound `|m0(xi, eta)| <= M0_GROWTH_CONSTANT * <xi>`; the three
/// families contribute at most 1/4, 1/8, 1/8.
pub const M0_GROWTH_CONSTANT: f64 = 0.5;

/// Quadratic phases this small would make a kernel-over-phase division
/// unsafe. The certified lower bound keeps lattice phases orders of
/// magnitude above this, so hitting the floor signals a sign bug, not a
/// small divisor; the evaluators panic on it.
pub const PHASE_DIVISOR_FLOOR: f64 = 1e-6;

fn psi_a(xi: Vec2, eta: Vec2) -> f64 {
    let diff = xi - eta;
    let (rx, re, rd) = (xi.norm(), eta.norm(), diff.norm());
    if rx == 0.0 || re == 0.0 || rd == 0.0 {
        return 0.0;
    }
    0.25 * xi.bracket() * (re / eta.bracket()) * xi.dot(diff) / (rx * rd)
}

fn psi_b(xi: Vec2, eta: Vec2) -> f64 {
    let diff = xi - eta;
    let (rx, re, rd) = (xi.norm(), eta.norm(), diff.norm());
    if rx == 0.0 || re == 0.0 || rd == 0.0 {
        return 0.0;
    }
    0.125 * rx * (re / eta.bracket()) * (rd / diff.bracket())
}

fn psi_c(xi: Vec2, eta: Vec2) -> f64 {
    let diff = xi - eta;
    let (rx, re, rd) = (xi.norm(), eta.norm(), diff.norm());
    if rx == 0.0 || re == 0.0 || rd == 0.0 {
        return 0.0;
    }
    0.125 * rx * eta.dot(diff) / (re * rd)
}

/// Per-combo signs of the three kernel families.
fn family_signs(combo: QuadCombo) -> (f64, f64, f64) {
    (
        -combo.e3.value(),
        1.0,
        combo.e2.value() * combo.e3.value(),
    )
}

/// Directional factor `z_axis / |z|`, 0 at the origin.
fn riesz_factor(axis: usize) -> PointFn {
    Arc::new(move |z: Vec2| {
        let r = z.norm();
        if r == 0.0 {
            return Complex64::ZERO;
        }
        let component = if axis == 0 { z.x } else { z.y };
        Complex64::new(component / r, 0.0)
    })
}

/// `|z| / <z>`.
fn abs_over_bracket() -> PointFn {
    Arc::new(|z: Vec2| Complex64::new(z.norm() / z.bracket(), 0.0))
}

/// `c * i * <z> * z_axis / |z|`, 0 at the origin.
fn bracket_riesz_out(c: f64, axis: usize) -> PointFn {
    Arc::new(move |z: Vec2| {
        let r = z.norm();
        if r == 0.0 {
            return Complex64::ZERO;
        }
        let component = if axis == 0 { z.x } else { z.y };
        Complex64::new(0.0, c * z.bracket() * component / r)
    })
}

/// `c * i * |z|`.
fn abs_out(c: f64) -> PointFn {
    Arc::new(move |z: Vec2| Complex64::new(0.0, c * z.norm()))
}

/// The quadratic kernel of one sign combination, with its five-term
/// separable factorization (two directional components from the transport
/// family, one squared-density term, two from the squared-velocity family).
pub fn m0_symbol(combo: QuadCombo) -> BilinearSymbol {
    let (sa, sb, sc) = family_signs(combo);
    let evaluator = move |xi: Vec2, eta: Vec2| {
        Complex64::new(
            0.0,
            sa * psi_a(xi, eta) + sb * psi_b(xi, eta) + sc * psi_c(xi, eta),
        )
    };
    let mut terms = Vec::with_capacity(5);
    for axis in 0..2 {
        terms.push(SeparableTerm {
            out: bracket_riesz_out(sa * 0.25, axis),
            left: riesz_factor(axis),
            right: abs_over_bracket(),
        });
    }
    terms.push(SeparableTerm {
        out: abs_out(sb * 0.125),
        left: abs_over_bracket(),
        right: abs_over_bracket(),
    });
    for axis in 0..2 {
        terms.push(SeparableTerm {
            out: abs_out(sc * 0.125),
            left: riesz_factor(axis),
            right: riesz_factor(axis),
        });
    }
    BilinearSymbol::new(evaluator).with_factorization(terms)
}

/// The kernel symmetrized between `eta` and `xi - eta`:
/// `(m0(xi, eta) + m0(xi, xi - eta)) / 2`. Only the transport family
/// moves under the swap, so the factorization gains two terms. Applied to
/// equal slot data the symmetrized kernel produces the same output as the
/// plain one, because the band sum is itself invariant under the swap.
pub fn m0_symbol_symmetrized(combo: QuadCombo) -> BilinearSymbol {
    let (sa, sb, sc) = family_signs(combo);
    let evaluator = move |xi: Vec2, eta: Vec2| {
        let half_a = 0.5 * (psi_a(xi, eta) + psi_a(xi, xi - eta));
        Complex64::new(0.0, sa * half_a + sb * psi_b(xi, eta) + sc * psi_c(xi, eta))
    };
    let mut terms = Vec::with_capacity(7);
    for axis in 0..2 {
        terms.push(SeparableTerm {
            out: bracket_riesz_out(sa * 0.125, axis),
            left: riesz_factor(axis),
            right: abs_over_bracket(),
        });
        terms.push(SeparableTerm {
            out: bracket_riesz_out(sa * 0.125, axis),
            left: abs_over_bracket(),
            right: riesz_factor(axis),
        });
    }
    terms.push(SeparableTerm {
        out: abs_out(sb * 0.125),
        left: abs_over_bracket(),
        right: abs_over_bracket(),
    });
    for axis in 0..2 {
        terms.push(SeparableTerm {
            out: abs_out(sc * 0.125),
            left: riesz_factor(axis),
            right: riesz_factor(axis),
        });
    }
    BilinearSymbol::new(evaluator).with_factorization(terms)
}

/// `m0(xi, eta) / phi(xi, eta)`, the phase-divided kernel entering cubic
/// symbols. Panics if the phase magnitude falls below
/// [`PHASE_DIVISOR_FLOOR`]; the certified lower bound makes that
/// unreachable for correct sign tables.
pub fn m0_over_phase(combo: QuadCombo) -> BilinearSymbol {
    let kernel = m0_symbol(combo);
    BilinearSymbol::new(move |xi: Vec2, eta: Vec2| {
        let value = kernel.eval(xi, eta);
        if value == Complex64::ZERO {
            return Complex64::ZERO;
        }
        let phase = combo.phase(xi, eta);
        assert!(
            phase.abs() >= PHASE_DIVISOR_FLOOR,
            "quadratic phase {phase:.3e} for combo {} at xi=({:.3},{:.3}) eta=({:.3},{:.3}) \
             is below the divisor floor; phase sign table is wrong",
            combo.label(),
            xi.x,
            xi.y,
            eta.x,
            eta.y,
        );
        value / phase
    })
}

/// The cubic kernel `m0_outer(xi, eta) m0_inner(eta, sigma) /
/// phi_outer(xi, eta)` produced by integrating by parts in time, carrying
/// its outer/inner factorization.
pub fn m1_symbol(outer: QuadCombo, inner: QuadCombo) -> TrilinearSymbol {
    let outer_sym = m0_over_phase(outer);
    let inner_sym = m0_symbol(inner);
    let (oc, ic) = (outer_sym.clone(), inner_sym.clone());
    TrilinearSymbol::new(move |xi, eta, sigma| oc.eval(xi, eta) * ic.eval(eta, sigma))
        .with_factorization(TrilinearFactors {
            outer: outer_sym,
            inner: inner_sym,
        })
}

/// How a profile factor enters an interaction slot.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FactorSlot {
    /// The field itself.
    Plain,
    /// The reflected conjugate `zeta -> conj(F(-zeta))`.
    ReflectedConjugate,
}

impl FactorSlot {
    /// Slot implied by a phase sign: minus rides with the plain factor.
    pub fn of_sign(sign: Sign) -> FactorSlot {
        match sign {
            Sign::Minus => FactorSlot::Plain,
            Sign::Plus => FactorSlot::ReflectedConjugate,
        }
    }

    /// The field as seen by this slot.
    pub fn view(self, f: &SpectralField) -> SpectralField {
        match self {
            FactorSlot::Plain => f.clone(),
            FactorSlot::ReflectedConjugate => f.reflect_conj(),
        }
    }
}

/// One of the four quadratic interaction terms: a sign combination, the
/// conjugation pattern of its two slots, and its kernel.
pub struct QuadraticTermSpec {
    pub combo: QuadCombo,
    /// Slot of the factor read at `eta`.
    pub eta_slot: FactorSlot,
    /// Slot of the factor read at `xi - eta`.
    pub diff_slot: FactorSlot,
    pub kernel: BilinearSymbol,
}

impl QuadraticTermSpec {
    pub fn for_combo(combo: QuadCombo) -> Self {
        QuadraticTermSpec {
            combo,
            eta_slot: FactorSlot::of_sign(combo.e2),
            diff_slot: FactorSlot::of_sign(combo.e3),
            kernel: m0_symbol(combo),
        }
    }

    /// The full interaction: all four sign combinations, each exactly once.
    pub fn catalogue() -> [QuadraticTermSpec; 4] {
        QuadCombo::all().map(QuadraticTermSpec::for_combo)
    }

    /// Apply the term to a single field occupying both slots, by direct
    /// quadrature.
    pub fn apply(&self, f: &SpectralField) -> Result<SpectralField, super::PseudoproductError> {
        super::bilinear_apply(&self.kernel, &self.diff_slot.view(f), &self.eta_slot.view(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{nonlinearity, DiagonalState};
    use crate::pseudoproduct::{
        bilinear_apply, bilinear_apply_separable, trilinear_apply, trilinear_apply_separable,
        FACTORIZATION_CONSISTENCY_TOL, FAST_PATH_EQUIVALENCE_TOL,
    };
    use crate::spectral::{GridSpec, SpectralField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, radius: f64) -> Vec2 {
        Vec2::new(
            rng.random_range(-radius..radius),
            rng.random_range(-radius..radius),
        )
    }

    fn sample_pairs(n: usize, radius: f64, seed: u64) -> Vec<(Vec2, Vec2)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (random_point(&mut rng, radius), random_point(&mut rng, radius)))
            .collect()
    }

    #[test]
    fn factorizations_reproduce_every_catalogued_kernel() {
        let points = sample_pairs(10_000, 20.0, 1);
        for combo in QuadCombo::all() {
            for symbol in [m0_symbol(combo), m0_symbol_symmetrized(combo)] {
                let residual = symbol.factorization_residual(&points).unwrap();
                assert!(
                    residual <= FACTORIZATION_CONSISTENCY_TOL,
                    "combo {}: factorization residual {residual:.3e}",
                    combo.label()
                );
            }
        }
    }

    #[test]
    fn kernels_vanish_at_singular_frequencies() {
        let p = Vec2::new(0.7, -1.2);
        for combo in QuadCombo::all() {
            let m = m0_symbol(combo);
            assert_eq!(m.eval(Vec2::ZERO, p), Complex64::ZERO);
            assert_eq!(m.eval(p, Vec2::ZERO), Complex64::ZERO);
            assert_eq!(m.eval(p, p), Complex64::ZERO);
            let tri = m1_symbol(combo, combo);
            assert_eq!(tri.eval(Vec2::ZERO, p, p * 0.5), Complex64::ZERO);
            assert_eq!(tri.eval(p, p, p * 0.5), Complex64::ZERO);
            assert_eq!(tri.eval(p, p * 0.5, Vec2::ZERO), Complex64::ZERO);
        }
    }

    #[test]
    fn symmetrized_kernel_is_invariant_under_the_slot_swap() {
        let points = sample_pairs(10_000, 20.0, 2);
        for combo in QuadCombo::all() {
            let m = m0_symbol_symmetrized(combo);
            let worst = points
                .iter()
                .map(|&(xi, eta)| (m.eval(xi, eta) - m.eval(xi, xi - eta)).norm())
                .fold(0.0f64, f64::max);
            assert!(worst <= 1e-12, "combo {}: asymmetry {worst:.3e}", combo.label());
        }
    }

    #[test]
    fn plain_and_symmetrized_kernels_agree_on_equal_slot_data() {
        // The band sum is invariant under eta -> xi - eta, so symmetrizing
        // the kernel cannot move the output when both slots hold the same
        // field. The eta -> xi - eta reduction of cubic slot bookkeeping
        // rests on this being lattice-exact.
        let grid = GridSpec::square(8, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut coeffs = vec![Complex64::ZERO; grid.len()];
        for (ix, iy) in grid.retained_positions() {
            coeffs[grid.index(ix, iy)] =
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let f = SpectralField::from_coeffs(grid, coeffs, false).unwrap();
        for combo in QuadCombo::all() {
            let plain = bilinear_apply(&m0_symbol(combo), &f, &f).unwrap();
            let sym = bilinear_apply(&m0_symbol_symmetrized(combo), &f, &f).unwrap();
            let diff = plain.sub(&sym).unwrap().l2_norm();
            assert!(
                diff <= 1e-12 * plain.l2_norm().max(1.0),
                "combo {}: symmetrization moved the output by {diff:.3e}",
                combo.label()
            );
        }
    }

    #[test]
    fn kernel_growth_stays_below_half_a_bracket() {
        let points = sample_pairs(10_000, 20.0, 3);
        let mut worst = 0.0f64;
        for combo in QuadCombo::all() {
            let m = m0_symbol(combo);
            for &(xi, eta) in &points {
                worst = worst.max(m.eval(xi, eta).norm() / xi.bracket());
            }
        }
        println!("largest |m0|/<xi> over samples: {worst:.6}");
        assert!(worst <= M0_GROWTH_CONSTANT + 1e-12);
    }

    #[test]
    fn cubic_kernel_growth_matches_the_phase_lower_bound() {
        // |m1| <= C <xi> <eta> <|xi| + |eta|>: two kernel growth factors
        // and one inverse phase, whose certified lower bound implies
        // C <= 1/4 / 0.05 = 5 up to sampling slack.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut worst = 0.0f64;
        for combo_outer in QuadCombo::all() {
            for combo_inner in QuadCombo::all() {
                let m = m1_symbol(combo_outer, combo_inner);
                for _ in 0..625 {
                    let xi = random_point(&mut rng, 20.0);
                    let eta = random_point(&mut rng, 20.0);
                    let sigma = random_point(&mut rng, 20.0);
                    let sum = xi.norm() + eta.norm();
                    let bound = xi.bracket() * eta.bracket() * (1.0 + sum * sum).sqrt();
                    worst = worst.max(m.eval(xi, eta, sigma).norm() / bound);
                }
            }
        }
        println!("largest |m1| / (<xi><eta><|xi|+|eta|>) over samples: {worst:.6}");
        assert!(worst <= 20.0, "cubic kernel growth constant {worst:.3}");
    }

    #[test]
    fn cubic_kernels_factor_exactly_and_their_fast_path_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let triples: Vec<(Vec2, Vec2, Vec2)> = (0..2_000)
            .map(|_| {
                (
                    random_point(&mut rng, 15.0),
                    random_point(&mut rng, 15.0),
                    random_point(&mut rng, 15.0),
                )
            })
            .collect();
        let grid = GridSpec::square(8, 5.0).unwrap();
        let mut coeffs = vec![Complex64::ZERO; grid.len()];
        for (ix, iy) in grid.retained_positions() {
            if (ix, iy) == (0, 0) {
                continue;
            }
            coeffs[grid.index(ix, iy)] =
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let f = SpectralField::from_coeffs(grid, coeffs, false).unwrap();
        use crate::phase_geometry::Sign::{Minus, Plus};
        for (outer, inner) in [
            (QuadCombo::new(Minus, Minus), QuadCombo::new(Plus, Minus)),
            (QuadCombo::new(Plus, Plus), QuadCombo::new(Minus, Plus)),
        ] {
            let m = m1_symbol(outer, inner);
            let residual = m.factorization_residual(&triples).unwrap();
            assert!(residual <= FACTORIZATION_CONSISTENCY_TOL, "residual {residual:.3e}");
            let direct = trilinear_apply(&m, &f, &f, &f).unwrap();
            let nested = trilinear_apply_separable(&m, &f, &f, &f).unwrap();
            let diff = direct.sub(&nested).unwrap().l2_norm()
                / direct.l2_norm().max(nested.l2_norm()).max(1e-300);
            assert!(diff <= FAST_PATH_EQUIVALENCE_TOL, "nested path off by {diff:.3e}");
        }
    }

    #[test]
    fn catalogue_lists_each_combo_once_with_the_sign_slot_rule() {
        let catalogue = QuadraticTermSpec::catalogue();
        let combos = QuadCombo::all();
        for (spec, combo) in catalogue.iter().zip(combos) {
            assert_eq!(spec.combo, combo);
            assert_eq!(spec.eta_slot, FactorSlot::of_sign(combo.e2));
            assert_eq!(spec.diff_slot, FactorSlot::of_sign(combo.e3));
            assert_eq!(
                spec.eta_slot == FactorSlot::Plain,
                combo.e2 == Sign::Minus,
                "plain factors ride with minus signs"
            );
        }
        // Exactly once each: the four combos are pairwise distinct.
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert_ne!(catalogue[i].combo, catalogue[j].combo);
            }
        }
    }

    /// The four catalogued terms, assembled with their conjugation
    /// patterns and summed, must reproduce the independently implemented
    /// physical-space nonlinearity. The time phases attached to each
    /// combo cancel exactly against the profile substitution, so the
    /// identity is time-independent: N(h) = sum_c T_{m0^c}(slotted h),
    /// with the cell measure dividing out. This pins kernel constants,
    /// family signs, slot patterns, and the measure convention at once.
    #[test]
    fn catalogue_reassembles_the_nonlinearity_of_the_flow() {
        let grid = GridSpec::square(16, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut coeffs = vec![Complex64::ZERO; grid.len()];
        for (ix, iy) in grid.retained_positions() {
            if (ix, iy) == (0, 0) {
                continue;
            }
            coeffs[grid.index(ix, iy)] =
                Complex64::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
        }
        let h = SpectralField::from_coeffs(grid, coeffs, false).unwrap();
        let state = DiagonalState::new(h.clone(), 0.0).unwrap();
        let want = nonlinearity(&state).unwrap();

        let mut got = SpectralField::zeros(grid);
        for spec in QuadraticTermSpec::catalogue() {
            got = got.add(&spec.apply(&h).unwrap()).unwrap();
        }
        let got = got.scale(Complex64::new(1.0 / grid.delta_eta(), 0.0));

        let scale = want.l2_norm();
        let diff = got.sub(&want).unwrap().l2_norm();
        assert!(
            diff <= 1e-11 * scale,
            "catalogue disagrees with the nonlinearity: rel residual {:.3e}",
            diff / scale
        );
    }

    #[test]
    fn separable_fast_path_matches_direct_for_every_combo_kernel() {
        let grid = GridSpec::square(8, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut make = |mean_zero: bool| {
            let mut coeffs = vec![Complex64::ZERO; grid.len()];
            for (ix, iy) in grid.retained_positions() {
                if mean_zero && (ix, iy) == (0, 0) {
                    continue;
                }
                coeffs[grid.index(ix, iy)] =
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
            SpectralField::from_coeffs(grid, coeffs, false).unwrap()
        };
        let f = make(true);
        let g = make(true);
        for combo in QuadCombo::all() {
            for m in [m0_symbol(combo), m0_symbol_symmetrized(combo)] {
                let direct = bilinear_apply(&m, &f, &g).unwrap();
                let fast = bilinear_apply_separable(&m, &f, &g).unwrap();
                let diff = direct.sub(&fast).unwrap().l2_norm()
                    / direct.l2_norm().max(fast.l2_norm()).max(1e-300);
                assert!(
                    diff <= FAST_PATH_EQUIVALENCE_TOL,
                    "combo {}: fast path off by {diff:.3e}",
                    combo.label()
                );
            }
        }
    }
}
