//! Oscillation phases of the quadratic and cubic frequency interactions,
//! their closed-form gradients, and the vector-algebra facts that make the
//! normal form possible: every sign choice of the quadratic phase
//! `<xi> +- <eta> +- <xi-eta>` stays away from zero like
//! `1/<|xi|+|eta|>`, and the cubic-phase gradients factor through
//! deformation matrices built from the map `z -> z/<z>`.
//!
//! Everything here is certified numerically: scans over random samples and
//! over the frequency lattices the simulator actually uses report minima,
//! residuals, and worst points.

mod deform;
mod scans;

pub use deform::{deform_q, DeformQ};
pub use scans::{
    deformation_scan, phase_factorization, phase_factorization_scan,
    phase_lower_bound_on_lattice, phase_lower_bound_scan, ComboMinimum, DeformationScanReport,
    FactorizationReport, FactorizationScanReport, PhaseScanReport, DEFORMATION_NORM_SLACK,
    DEFORMATION_RESIDUAL_TOL, DEFORMATION_WEIGHTED_FLOOR, FACTORIZATION_PASS_FRACTION,
    FACTORIZATION_RESIDUAL_TOL, NEAR_SINGULAR_DET, PHASE_PRODUCT_FLOOR,
};

use serde::Serialize;

/// A point in the frequency plane.
#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn norm_sqr(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Japanese bracket `<z> = sqrt(1 + |z|^2)`.
    pub fn bracket(self) -> f64 {
        (1.0 + self.norm_sqr()).sqrt()
    }

    /// The bounded direction `z/<z>`.
    pub fn over_bracket(self) -> Vec2 {
        let b = self.bracket();
        Vec2::new(self.x / b, self.y / b)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

/// A real 2x2 matrix, row-major.
#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 {
        a: 0.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
    };
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub fn mul_vec(self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn matmul(self, rhs: Mat2) -> Mat2 {
        Mat2 {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn scale(self, k: f64) -> Mat2 {
        Mat2 {
            a: self.a * k,
            b: self.b * k,
            c: self.c * k,
            d: self.d * k,
        }
    }

    pub fn plus(self, rhs: Mat2) -> Mat2 {
        Mat2 {
            a: self.a + rhs.a,
            b: self.b + rhs.b,
            c: self.c + rhs.c,
            d: self.d + rhs.d,
        }
    }

    pub fn det(self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2 {
            a: self.d / det,
            b: -self.b / det,
            c: -self.c / det,
            d: self.a / det,
        })
    }

    /// Operator (spectral) norm: the largest singular value, from the
    /// closed-form eigenvalues of the 2x2 Gram matrix.
    pub fn op_norm(self) -> f64 {
        let p = self.a * self.a + self.c * self.c;
        let q = self.a * self.b + self.c * self.d;
        let r = self.b * self.b + self.d * self.d;
        let mean = 0.5 * (p + r);
        let disc = (0.5 * (p - r)).hypot(q);
        (mean + disc).max(0.0).sqrt()
    }
}

/// A sign in a phase pattern.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn label(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Sign choice of a quadratic phase
/// `phi(xi, eta) = <xi> + e2 <eta> + e3 <xi - eta>`.
///
/// The sign slots double as the conjugation pattern of the interaction the
/// phase belongs to: the factor at `eta` enters plain iff `e2` is minus,
/// the factor at `xi - eta` plain iff `e3` is minus.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct QuadCombo {
    pub e2: Sign,
    pub e3: Sign,
}

impl QuadCombo {
    pub fn new(e2: Sign, e3: Sign) -> Self {
        QuadCombo { e2, e3 }
    }

    /// All four sign choices, in a fixed enumeration order.
    pub fn all() -> [QuadCombo; 4] {
        use Sign::{Minus, Plus};
        [
            QuadCombo::new(Minus, Minus),
            QuadCombo::new(Minus, Plus),
            QuadCombo::new(Plus, Minus),
            QuadCombo::new(Plus, Plus),
        ]
    }

    pub fn phase(self, xi: Vec2, eta: Vec2) -> f64 {
        xi.bracket() + self.e2.value() * eta.bracket() + self.e3.value() * (xi - eta).bracket()
    }

    pub fn grad_xi(self, xi: Vec2, eta: Vec2) -> Vec2 {
        xi.over_bracket() + (xi - eta).over_bracket() * self.e3.value()
    }

    pub fn grad_eta(self, xi: Vec2, eta: Vec2) -> Vec2 {
        eta.over_bracket() * self.e2.value() - (xi - eta).over_bracket() * self.e3.value()
    }

    /// Two-character sign label, e.g. `--` or `+-`.
    pub fn label(self) -> String {
        format!("{}{}", self.e2.label(), self.e3.label())
    }
}

/// Sign choice of a cubic phase
/// `phi(xi, eta, sigma) = <xi> + e2 <xi-eta> + e3 <eta-sigma> + e4 <sigma>`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct CubicCombo {
    pub e2: Sign,
    pub e3: Sign,
    pub e4: Sign,
}

impl CubicCombo {
    pub fn new(e2: Sign, e3: Sign, e4: Sign) -> Self {
        CubicCombo { e2, e3, e4 }
    }

    /// All eight sign choices, in a fixed enumeration order.
    pub fn all() -> [CubicCombo; 8] {
        use Sign::{Minus, Plus};
        let mut out = [CubicCombo::new(Minus, Minus, Minus); 8];
        let signs = [Minus, Plus];
        let mut k = 0;
        for &e2 in &signs {
            for &e3 in &signs {
                for &e4 in &signs {
                    out[k] = CubicCombo::new(e2, e3, e4);
                    k += 1;
                }
            }
        }
        out
    }

    pub fn phase(self, xi: Vec2, eta: Vec2, sigma: Vec2) -> f64 {
        xi.bracket()
            + self.e2.value() * (xi - eta).bracket()
            + self.e3.value() * (eta - sigma).bracket()
            + self.e4.value() * sigma.bracket()
    }

    pub fn grad_xi(self, xi: Vec2, eta: Vec2, _sigma: Vec2) -> Vec2 {
        xi.over_bracket() + (xi - eta).over_bracket() * self.e2.value()
    }

    pub fn grad_eta(self, xi: Vec2, eta: Vec2, sigma: Vec2) -> Vec2 {
        (eta - sigma).over_bracket() * self.e3.value()
            - (xi - eta).over_bracket() * self.e2.value()
    }

    pub fn grad_sigma(self, _xi: Vec2, eta: Vec2, sigma: Vec2) -> Vec2 {
        sigma.over_bracket() * self.e4.value() - (eta - sigma).over_bracket() * self.e3.value()
    }

    pub fn label(self) -> String {
        format!(
            "{}{}{}",
            self.e2.label(),
            self.e3.label(),
            self.e4.label()
        )
    }
}

/// The three cubic phases whose xi-gradient factors through the gradients
/// in the inner variables.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum FactorablePhase {
    /// `<xi> + <xi-eta> - <eta-sigma> - <sigma>`.
    Phi1,
    /// `<xi> - <xi-eta> + <eta-sigma> - <sigma>`.
    Phi2,
    /// `<xi> - <xi-eta> - <eta-sigma> + <sigma>`.
    Phi3,
}

impl FactorablePhase {
    pub fn combo(self) -> CubicCombo {
        use Sign::{Minus, Plus};
        match self {
            FactorablePhase::Phi1 => CubicCombo::new(Plus, Minus, Minus),
            FactorablePhase::Phi2 => CubicCombo::new(Minus, Plus, Minus),
            FactorablePhase::Phi3 => CubicCombo::new(Minus, Minus, Plus),
        }
    }

    pub fn all() -> [FactorablePhase; 3] {
        [
            FactorablePhase::Phi1,
            FactorablePhase::Phi2,
            FactorablePhase::Phi3,
        ]
    }
}
