//! The cubic remainder's term table, generated by substituting the
//! quadratic profile equation into itself.
//!
//! The profile equation reads, per quadratic sign combo `c = (e2, e3)`,
//!
//! ```text
//! d/ds f^(s, xi) = sum_c sum_eta e^{-is phi_c(xi,eta)} m0_c(xi,eta)
//!                  (V_{e3} f^)(xi-eta) (V_{e2} f^)(eta),
//! ```
//!
//! where `V_-` is the identity and `V_+` the reflected conjugate
//! `zeta -> conj(F(-zeta))`. Integrating the Duhamel integral by parts in
//! `s` leaves `e^{-is phi_c}/(i phi_c) m0_c` against
//! `d/ds [(V_{e3} f^)(xi-eta) (V_{e2} f^)(eta)]`, and the product rule
//! splits each combo into a term where the derivative hits the `eta`
//! factor and one where it hits the `xi-eta` factor. The second kind is
//! reduced to the first by the change of variables `eta -> xi - eta`:
//! that swap carries `phi_{(e2,e3)}(xi, eta)` to `phi_{(e3,e2)}(xi, eta)`,
//! exchanges the two slots, and evaluates the kernel at the swapped pair,
//! so the reduced term runs under the *effective* combo `(e3, e2)` with
//! kernel `m0_c(xi, xi-eta)` kept verbatim (the kernel itself is not
//! swap-symmetric term by term).
//!
//! Substituting `d/ds (V_e f^)(eta)` from the profile equation at inner
//! combo `c' = (e2', e3')` closes the recursion:
//!
//! - plain slot (`e = -`): the inner expansion enters as written, so the
//!   total oscillation is `e^{-is[phi_e(xi,eta) + phi_{c'}(eta,sigma)]}`
//!   and the `<eta>` contributions cancel (the effective combo has
//!   `e2 = -1` there);
//! - reflected-conjugate slot (`e = +`): conjugating the inner expansion
//!   flips its oscillation to `e^{+is phi_{c'}}`, negates the purely
//!   imaginary kernel `m0_{c'}`, and swaps each inner slot view for its
//!   opposite; the `<eta>` contributions again cancel, now by subtraction.
//!
//! Either way the surviving phase is cubic,
//! `<xi> + e3_eff <xi-eta> +- e3' <eta-sigma> +- e2' <sigma>`, and every
//! factor of the assembled integrand is plain exactly when its phase sign
//! is minus, the same slot rule the quadratic catalogue obeys. Four outer
//! combos times two product-rule slots times four inner combos gives the
//! 32 terms below; each cubic sign combo is hit by exactly four of them.

use num_complex::Complex64;

use crate::phase_geometry::{CubicCombo, QuadCombo, Sign, Vec2};
use crate::pseudoproduct::{m0_over_phase, m0_symbol, BilinearSymbol, FactorSlot};

/// Which factor of the quadratic integrand the time derivative hit.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DerivativeSlot {
    /// The factor read at `eta`; substitution applies directly.
    Eta,
    /// The factor read at `xi - eta`; reduced to the `eta` case by the
    /// change of variables `eta -> xi - eta`.
    Diff,
}

/// One of the 32 cubic terms: provenance, assembled sign combo, overall
/// sign, and the conjugation pattern of the three profile factors.
#[derive(Clone, Debug)]
pub struct CubicTermSpec {
    /// Quadratic combo of the Duhamel term being integrated by parts.
    pub outer: QuadCombo,
    /// Product-rule slot the time derivative fell on.
    pub slot: DerivativeSlot,
    /// Quadratic combo substituted for the differentiated factor.
    pub inner: QuadCombo,
    /// Outer combo after the `eta -> xi - eta` reduction; equals `outer`
    /// for the `Eta` slot and its swap for the `Diff` slot.
    pub effective: QuadCombo,
    /// Sign combo of the assembled cubic phase
    /// `<xi> + e2 <xi-eta> + e3 <eta-sigma> + e4 <sigma>`.
    pub combo: CubicCombo,
    /// Whether the reflected-conjugate branch negated the term.
    pub negated: bool,
    /// Conjugation of the factor read at `xi - eta`.
    pub diff_slot: FactorSlot,
    /// Conjugation of the factor read at `eta - sigma`.
    pub mid_slot: FactorSlot,
    /// Conjugation of the factor read at `sigma`.
    pub sigma_slot: FactorSlot,
}

/// All 32 cubic terms, enumerated outer combo by product-rule slot by
/// inner combo.
pub fn cubic_catalogue() -> Vec<CubicTermSpec> {
    let mut terms = Vec::with_capacity(32);
    for outer in QuadCombo::all() {
        for slot in [DerivativeSlot::Eta, DerivativeSlot::Diff] {
            let effective = match slot {
                DerivativeSlot::Eta => outer,
                DerivativeSlot::Diff => QuadCombo::new(outer.e3, outer.e2),
            };
            for inner in QuadCombo::all() {
                let negated = effective.e2 == Sign::Plus;
                let (mid_sign, sigma_sign) = if negated {
                    (inner.e3.flip(), inner.e2.flip())
                } else {
                    (inner.e3, inner.e2)
                };
                let combo = CubicCombo::new(effective.e3, mid_sign, sigma_sign);
                terms.push(CubicTermSpec {
                    outer,
                    slot,
                    inner,
                    effective,
                    combo,
                    negated,
                    diff_slot: FactorSlot::of_sign(effective.e3),
                    mid_slot: FactorSlot::of_sign(mid_sign),
                    sigma_slot: FactorSlot::of_sign(sigma_sign),
                });
            }
        }
    }
    terms
}

impl CubicTermSpec {
    /// The time-independent outer weight `sign * m-hat(xi,eta) / (i phi_e)`
    /// of the term, where `m-hat` evaluates the outer kernel at the swapped
    /// pair on the `Diff` branch. No separable factorization: the phase
    /// divisor is not a product of one-frequency factors, so this symbol
    /// always takes the direct quadrature path.
    pub fn outer_symbol(&self) -> BilinearSymbol {
        let base = m0_over_phase(self.outer);
        let swap = self.slot == DerivativeSlot::Diff;
        // sign / (i phi) = -sign * i / phi.
        let scale = Complex64::new(0.0, if self.negated { 1.0 } else { -1.0 });
        BilinearSymbol::new(move |xi: Vec2, eta: Vec2| {
            let second = if swap { xi - eta } else { eta };
            scale * base.eval(xi, second)
        })
    }

    /// The inner kernel `m0_{c'}(eta, sigma)`, with its separable
    /// factorization (the substituted expansion enters with its plain
    /// kernel; the reflected-conjugate branch's negation lives in
    /// `negated`, already folded into [`CubicTermSpec::outer_symbol`]).
    pub fn inner_symbol(&self) -> BilinearSymbol {
        m0_symbol(self.inner)
    }
}
