//! The deformation matrix `Q(x, y)`: the line integral of the Jacobian of
//! `z -> z/<z>` along the segment from `y + (x - y)` back to `y`, so that
//! `x/<x> - y/<y> = Q(x, y) (x - y)` exactly.
//!
//! The Jacobian `J(z) = (<z>^2 I - z z^T)/<z>^3` has eigenvalues `1/<z>`
//! and `1/<z>^3`, hence `|J| <= 1` and `|Q| <= 1`, while the smallest
//! eigenvalue along the segment controls `|Q^{-1}|`.

use super::{Mat2, Vec2};
use serde::Serialize;

/// 16-point Gauss-Legendre nodes on [-1, 1] (positive half).
const GL16_NODES: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_7,
    0.755_404_408_355_003,
    0.865_631_202_387_831_7,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];

const GL16_WEIGHTS: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_5,
    0.149_595_988_816_576_7,
    0.124_628_971_255_533_9,
    0.095_158_511_682_492_8,
    0.062_253_523_938_647_9,
    0.027_152_459_411_754_1,
];

/// Jacobian of `z -> z/<z>`.
pub(crate) fn jacobian(z: Vec2) -> Mat2 {
    let b2 = 1.0 + z.norm_sqr();
    let b3 = b2 * b2.sqrt();
    Mat2 {
        a: (b2 - z.x * z.x) / b3,
        b: (-z.x * z.y) / b3,
        c: (-z.y * z.x) / b3,
        d: (b2 - z.y * z.y) / b3,
    }
}

/// Result of assembling `Q(x, y)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeformQ {
    pub q: Mat2,
    /// `| (x/<x> - y/<y>) - Q (x - y) |`, the fundamental-theorem defect of
    /// the quadrature.
    pub residual: f64,
    /// Operator norm of `Q`.
    pub norm: f64,
    /// Smallest singular value of `Q`, controlling invertibility.
    pub min_singular: f64,
}

/// Integrate the Jacobian of `z -> z/<z>` along the segment from `y` to `x`.
///
/// Composite 16-point Gauss-Legendre, one panel per unit of segment
/// length: the integrand's complex singularities sit at distance 1 from
/// the segment when it crosses the origin, so unit panels keep the
/// Bernstein-ellipse convergence factor comfortably above 3 and the defect
/// near machine precision.
pub fn deform_q(x: Vec2, y: Vec2) -> DeformQ {
    let seg = x - y;
    let len = seg.norm();
    let panels = len.ceil().max(1.0) as usize;
    let mut q = Mat2::ZERO;
    for p in 0..panels {
        // Panel [t0, t1] of the parameter tau in [0, 1].
        let t0 = p as f64 / panels as f64;
        let t1 = (p + 1) as f64 / panels as f64;
        let mid = 0.5 * (t0 + t1);
        let half = 0.5 * (t1 - t0);
        for k in 0..8 {
            for s in [-1.0, 1.0] {
                let tau = mid + s * half * GL16_NODES[k];
                let z = y + seg * tau;
                q = q.plus(jacobian(z).scale(GL16_WEIGHTS[k] * half));
            }
        }
    }
    let achieved = q.mul_vec(seg);
    let target = x.over_bracket() - y.over_bracket();
    let residual = (achieved - target).norm();
    let norm = q.op_norm();
    let min_singular = match q.inverse() {
        Some(inv) => {
            let n = inv.op_norm();
            if n > 0.0 {
                1.0 / n
            } else {
                0.0
            }
        }
        None => 0.0,
    };
    DeformQ {
        q,
        residual,
        norm,
        min_singular,
    }
}
