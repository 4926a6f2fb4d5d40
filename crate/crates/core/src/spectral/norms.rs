//! Norms: Lebesgue by rectangle-rule quadrature on the physical grid,
//! Sobolev on the frequency side, and the centered-box weighted norm used
//! for profiles. Rectangle-rule quadrature is the single source of truth
//! for every acceptance threshold that mentions an L^p norm.

use super::{apply_multiplier, lp_project, LpKind, MultiplierSpec, SpectralError, SpectralField};

fn physical_magnitudes(f: &SpectralField) -> Vec<f64> {
    f.to_physical().iter().map(|c| c.norm()).collect()
}

fn lp_of_samples(vals: &[f64], p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        vals.iter().copied().fold(0.0, f64::max)
    } else if p == 2.0 {
        (vals.iter().map(|v| v * v).sum::<f64>() * cell).sqrt()
    } else {
        (vals.iter().map(|v| v.powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }
}

/// `L^p` norm by rectangle rule; `p = f64::INFINITY` gives the sup norm.
pub fn lebesgue_norm(f: &SpectralField, p: f64) -> Result<f64, SpectralError> {
    if !(p >= 1.0) {
        return Err(SpectralError::BadExponent(p));
    }
    Ok(lp_of_samples(
        &physical_magnitudes(f),
        p,
        f.grid().cell_area(),
    ))
}

/// Sobolev norm `|| <grad>^s f ||_2`, computed on the frequency side.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    let grid = f.grid();
    let mut sum = 0.0;
    for (ix, iy) in grid.positions() {
        let (x1, x2) = grid.xi(ix, iy);
        let w = (1.0 + x1 * x1 + x2 * x2).powf(s);
        sum += w * f.coeff(ix, iy).norm_sqr();
    }
    grid.box_length() * sum.sqrt()
}

/// Weighted profile norm `|| <x> f ||_p` with `<x>` evaluated at the
/// centered-box representative of each sample point.
pub fn weighted_profile_norm(f: &SpectralField, p: f64) -> Result<f64, SpectralError> {
    if !(p >= 1.0) {
        return Err(SpectralError::BadExponent(p));
    }
    let grid = f.grid();
    let phys = f.to_physical();
    let vals: Vec<f64> = grid
        .positions()
        .map(|(px, py)| {
            let (x, y) = grid.coord(px, py);
            let w = (1.0 + x * x + y * y).sqrt();
            w * phys[grid.index(px, py)].norm()
        })
        .collect();
    Ok(lp_of_samples(&vals, p, grid.cell_area()))
}

/// Measured Bernstein ratios for the annulus piece `P_M f`.
#[derive(Clone, Copy, Debug)]
pub struct BernsteinReport {
    /// `|| |grad|^s P_M f ||_p / (M^s || P_M f ||_p)`.
    pub ratio_smooth_up: f64,
    /// `|| |grad|^{-s} P_M f ||_p / (M^{-s} || P_M f ||_p)`.
    pub ratio_smooth_down: f64,
    /// `|| P_M f ||_q / (M^{2/p - 2/q} || P_M f ||_p)`.
    pub ratio_embed: f64,
    /// Whether all three ratios lie in `[1/window, window]`.
    pub pass: bool,
}

/// Measure the Bernstein ratios of `f` at scale `m` between exponents
/// `p <= q` with smoothing order `s`, against the window `[1/window, window]`.
pub fn bernstein_check(
    f: &SpectralField,
    m: f64,
    p: f64,
    q: f64,
    s: f64,
    window: f64,
) -> Result<BernsteinReport, SpectralError> {
    if !(p >= 1.0) {
        return Err(SpectralError::BadExponent(p));
    }
    if !(q >= 1.0) {
        return Err(SpectralError::BadExponent(q));
    }
    if p > q {
        return Err(SpectralError::ExponentOrder { p, q });
    }
    let band = lp_project(f, m, LpKind::At)?;
    let base_p = lebesgue_norm(&band, p)?;
    if base_p == 0.0 {
        return Err(SpectralError::EmptyBand);
    }
    let up = apply_multiplier(&MultiplierSpec::AbsGradPower(s), &band)?;
    let down = apply_multiplier(&MultiplierSpec::AbsGradPower(-s), &band)?;
    let ratio_smooth_up = lebesgue_norm(&up, p)? / (m.powf(s) * base_p);
    let ratio_smooth_down = lebesgue_norm(&down, p)? / (m.powf(-s) * base_p);
    let exponent_gap = if q.is_infinite() {
        2.0 / p
    } else {
        2.0 / p - 2.0 / q
    };
    let ratio_embed = lebesgue_norm(&band, q)? / (m.powf(exponent_gap) * base_p);
    let inside = |r: f64| r >= 1.0 / window && r <= window;
    Ok(BernsteinReport {
        ratio_smooth_up,
        ratio_smooth_down,
        ratio_embed,
        pass: inside(ratio_smooth_up) && inside(ratio_smooth_down) && inside(ratio_embed),
    })
}
