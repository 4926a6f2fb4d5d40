//! Fields on a periodic box, stored as Fourier-series coefficients.
//!
//! The domain is the square of side `L` centered at the origin. A field is
//! represented by coefficients `c(xi)` on the wavenumber lattice
//! `xi = (2*pi/L)*(j1, j2)`, `j` in the symmetric integer range, so that
//!
//! ```text
//! f(x) = sum_xi c(xi) exp(i xi . x),      c(xi) = (1/L^2) int exp(-i xi . x) f(x) dx.
//! ```
//!
//! This series-coefficient normalization is the single convention used
//! everywhere: `from_physical` divides the forward FFT by `nx*ny`,
//! `to_physical` is the plain unnormalized inverse FFT, and Parseval reads
//! `int |f|^2 dx = L^2 sum |c|^2`.
//!
//! Quadratic products are dealiased by the 2/3 rule: the retained band is
//! `3|j1| < nx, 3|j2| < ny` per axis, and [`dealiased_product`] truncates
//! its inputs and output to that band, which makes the circular convolution
//! agree with the exact coefficient convolution on the band.

mod fft;
mod kernel;
mod multiplier;
mod norms;

pub use kernel::{kernel_l1_norm, kernel_l1_report, KernelL1Report, KERNEL_L1_RATIO_BOUND};
pub use multiplier::{apply_multiplier, bump, derivative, lp_project, LpKind, MultiplierSpec};
pub use norms::{
    bernstein_check, lebesgue_norm, sobolev_norm, weighted_profile_norm, BernsteinReport,
};

use num_complex::Complex64;
use thiserror::Error;

/// Errors from grid construction, field construction, and spectral ops.
#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("grid axes must be even and at least 4, got {nx}x{ny}")]
    BadGridSize { nx: usize, ny: usize },
    #[error("box length must be positive and finite, got {0}")]
    BadBoxLength(f64),
    #[error("grids do not match: {left:?} vs {right:?}")]
    GridMismatch { left: GridSpec, right: GridSpec },
    #[error("array has length {got}, grid needs {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("coefficients are not Hermitian-symmetric: relative residual {residual:.3e}")]
    NotHermitian { residual: f64 },
    #[error("operation needs a real field, but is_real is not set")]
    NotRealField,
    #[error("custom multiplier table has length {got}, lattice needs {want}")]
    MultiplierTableMismatch { got: usize, want: usize },
    #[error("projection scale must be positive and finite, got {0}")]
    BadLpScale(f64),
    #[error("Lebesgue exponent must satisfy p >= 1, got {0}")]
    BadExponent(f64),
    #[error("Bernstein check needs p <= q, got p={p}, q={q}")]
    ExponentOrder { p: f64, q: f64 },
    #[error("band-limited piece vanishes; Bernstein ratios are undefined")]
    EmptyBand,
    #[error("kernel box would need more than {max} points per axis (box length {box_length:.1}); tail goal unreachable within the memory budget")]
    KernelGridTooLarge { max: usize, box_length: f64 },
    #[error("kernel parameters must satisfy M > 0 and t >= 0, got M={m}, t={t}")]
    BadKernelParams { m: f64, t: f64 },
}

/// Discretization of the periodic box: points per axis and box side length.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct GridSpec {
    nx: usize,
    ny: usize,
    box_length: f64,
}

impl GridSpec {
    /// Grid with `nx` x `ny` points on the square of side `box_length`.
    pub fn new(nx: usize, ny: usize, box_length: f64) -> Result<Self, SpectralError> {
        if nx < 4 || ny < 4 || !nx.is_multiple_of(2) || !ny.is_multiple_of(2) {
            return Err(SpectralError::BadGridSize { nx, ny });
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(SpectralError::BadBoxLength(box_length));
        }
        Ok(Self { nx, ny, box_length })
    }

    /// Square grid shorthand.
    pub fn square(n: usize, box_length: f64) -> Result<Self, SpectralError> {
        Self::new(n, n, box_length)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Total number of lattice points.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Wavenumber spacing `2*pi/L` (same on both axes).
    pub fn delta_xi(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.box_length
    }

    /// Frequency-cell measure `(2*pi/L)^2`, the weight of lattice sums
    /// standing in for frequency integrals.
    pub fn delta_eta(&self) -> f64 {
        self.delta_xi() * self.delta_xi()
    }

    /// Physical-cell area `(L/nx)*(L/ny)`, the rectangle-rule quadrature weight.
    pub fn cell_area(&self) -> f64 {
        (self.box_length / self.nx as f64) * (self.box_length / self.ny as f64)
    }

    /// Row-major storage index of lattice position `(ix, iy)`.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.nx && iy < self.ny);
        iy * self.nx + ix
    }

    /// Symmetric-range integer pair: index `i` maps to `i` below the Nyquist
    /// split and to `i - n` at or above it, so the lattice is closed under
    /// negation (the Nyquist index is its own mirror).
    pub fn freq_int(&self, ix: usize, iy: usize) -> (i64, i64) {
        (
            wrap_index(ix, self.nx),
            wrap_index(iy, self.ny),
        )
    }

    /// Wavenumber at lattice position `(ix, iy)`.
    pub fn xi(&self, ix: usize, iy: usize) -> (f64, f64) {
        let (j1, j2) = self.freq_int(ix, iy);
        let d = self.delta_xi();
        (d * j1 as f64, d * j2 as f64)
    }

    /// Centered-box physical coordinate of sample `(px, py)`.
    pub fn coord(&self, px: usize, py: usize) -> (f64, f64) {
        let dx = self.box_length / self.nx as f64;
        let dy = self.box_length / self.ny as f64;
        (
            dx * wrap_index(px, self.nx) as f64,
            dy * wrap_index(py, self.ny) as f64,
        )
    }

    /// Lattice position of `-xi` for the position `(ix, iy)`.
    pub fn neg_index(&self, ix: usize, iy: usize) -> (usize, usize) {
        ((self.nx - ix) % self.nx, (self.ny - iy) % self.ny)
    }

    /// Whether `(ix, iy)` lies in the dealiased band (2/3 rule, per axis).
    /// The bound is strict, `3|j| < n`, so that a wrapped sum of two band
    /// frequencies can never land back inside the band.
    pub fn retained(&self, ix: usize, iy: usize) -> bool {
        let (j1, j2) = self.freq_int(ix, iy);
        3 * j1.unsigned_abs() < self.nx as u64 && 3 * j2.unsigned_abs() < self.ny as u64
    }

    /// Largest retained integer frequency per axis: `(K1, K2)` with
    /// `3*K < n` on each.
    pub fn retained_extent(&self) -> (i64, i64) {
        (
            ((self.nx as i64) - 1) / 3,
            ((self.ny as i64) - 1) / 3,
        )
    }

    /// All lattice positions in row-major order.
    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nx = self.nx;
        (0..self.len()).map(move |k| (k % nx, k / nx))
    }

    /// Lattice positions inside the dealiased band.
    pub fn retained_positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.positions().filter(|&(ix, iy)| self.retained(ix, iy))
    }
}

fn wrap_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// A complex scalar field stored as Fourier-series coefficients.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
    is_real: bool,
}

impl SpectralField {
    /// The zero field (flagged real).
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::ZERO; grid.len()],
            is_real: true,
        }
    }

    /// Wrap raw coefficients. With `is_real` set, Hermitian symmetry
    /// `c(-xi) = conj(c(xi))` is validated to 1e-12 relative tolerance.
    pub fn from_coeffs(
        grid: GridSpec,
        coeffs: Vec<Complex64>,
        is_real: bool,
    ) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.len() {
            return Err(SpectralError::DimensionMismatch {
                got: coeffs.len(),
                want: grid.len(),
            });
        }
        let field = Self {
            grid,
            coeffs,
            is_real,
        };
        if is_real {
            let residual = field.hermitian_residual();
            if residual > 1e-12 {
                return Err(SpectralError::NotHermitian { residual });
            }
        }
        Ok(field)
    }

    /// Transform physical samples of a real field (row-major, `ny` rows of
    /// `nx`) into coefficients.
    pub fn from_physical_real(grid: GridSpec, samples: &[f64]) -> Result<Self, SpectralError> {
        if samples.len() != grid.len() {
            return Err(SpectralError::DimensionMismatch {
                got: samples.len(),
                want: grid.len(),
            });
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft::dft2(&mut buf, grid.nx, grid.ny, false);
        let scale = 1.0 / grid.len() as f64;
        for c in &mut buf {
            *c *= scale;
        }
        Ok(Self {
            grid,
            coeffs: buf,
            is_real: true,
        })
    }

    /// Transform physical samples of a complex field into coefficients.
    pub fn from_physical_complex(
        grid: GridSpec,
        samples: &[Complex64],
    ) -> Result<Self, SpectralError> {
        if samples.len() != grid.len() {
            return Err(SpectralError::DimensionMismatch {
                got: samples.len(),
                want: grid.len(),
            });
        }
        let mut buf = samples.to_vec();
        fft::dft2(&mut buf, grid.nx, grid.ny, false);
        let scale = 1.0 / grid.len() as f64;
        for c in &mut buf {
            *c *= scale;
        }
        Ok(Self {
            grid,
            coeffs: buf,
            is_real: false,
        })
    }

    /// Physical samples (complex), row-major.
    pub fn to_physical(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        fft::dft2(&mut buf, self.grid.nx, self.grid.ny, true);
        buf
    }

    /// Physical samples of a field flagged real; the imaginary residue of
    /// the inverse transform is discarded (it is roundoff by the invariant).
    pub fn to_physical_real(&self) -> Result<Vec<f64>, SpectralError> {
        if !self.is_real {
            return Err(SpectralError::NotRealField);
        }
        Ok(self.to_physical().iter().map(|c| c.re).collect())
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn coeff(&self, ix: usize, iy: usize) -> Complex64 {
        self.coeffs[self.grid.index(ix, iy)]
    }

    pub fn zero_mode(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Max deviation from Hermitian symmetry relative to the largest coefficient.
    pub fn hermitian_residual(&self) -> f64 {
        let peak = self
            .coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for (ix, iy) in self.grid.positions() {
            let (mx, my) = self.grid.neg_index(ix, iy);
            let err = (self.coeff(mx, my) - self.coeff(ix, iy).conj()).norm();
            worst = worst.max(err);
        }
        worst / peak
    }

    /// Rebuild with coefficients mapped position-wise; `keeps_real` states
    /// whether the map preserves Hermitian symmetry.
    pub fn map_coeffs<M>(&self, keeps_real: bool, mut m: M) -> SpectralField
    where
        M: FnMut(usize, usize, Complex64) -> Complex64,
    {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (ix, iy) in self.grid.positions() {
            coeffs.push(m(ix, iy, self.coeff(ix, iy)));
        }
        SpectralField {
            grid: self.grid,
            coeffs,
            is_real: self.is_real && keeps_real,
        }
    }

    /// Truncate to the dealiased band.
    pub fn mask_retained(&self) -> SpectralField {
        let grid = self.grid;
        self.map_coeffs(true, |ix, iy, c| {
            if grid.retained(ix, iy) {
                c
            } else {
                Complex64::ZERO
            }
        })
    }

    /// The reflected conjugate `zeta -> conj(c(-zeta))`; acts as the
    /// identity on Hermitian-symmetric fields.
    pub fn reflect_conj(&self) -> SpectralField {
        let mut coeffs = vec![Complex64::ZERO; self.coeffs.len()];
        for (ix, iy) in self.grid.positions() {
            let (mx, my) = self.grid.neg_index(ix, iy);
            coeffs[self.grid.index(ix, iy)] = self.coeff(mx, my).conj();
        }
        SpectralField {
            grid: self.grid,
            coeffs,
            is_real: self.is_real,
        }
    }

    /// Pointwise linear combination `a*self + b*other`.
    pub fn linear_comb(
        &self,
        a: Complex64,
        other: &SpectralField,
        b: Complex64,
    ) -> Result<SpectralField, SpectralError> {
        check_same_grid(self, other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Ok(SpectralField {
            grid: self.grid,
            coeffs,
            is_real: self.is_real && other.is_real && a.im == 0.0 && b.im == 0.0,
        })
    }

    /// Pointwise sum.
    pub fn add(&self, other: &SpectralField) -> Result<SpectralField, SpectralError> {
        self.linear_comb(Complex64::ONE, other, Complex64::ONE)
    }

    /// Pointwise difference.
    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField, SpectralError> {
        self.linear_comb(Complex64::ONE, other, -Complex64::ONE)
    }

    /// Scale by a complex constant.
    pub fn scale(&self, a: Complex64) -> SpectralField {
        SpectralField {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|&c| a * c).collect(),
            is_real: self.is_real && a.im == 0.0,
        }
    }

    /// Coefficient-side L2 norm `L * sqrt(sum |c|^2)`, equal to the physical
    /// L2 norm by Parseval.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        self.grid.box_length * sum.sqrt()
    }

    /// Largest coefficient magnitude.
    pub fn coeff_sup(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn check_same_grid(
    a: &SpectralField,
    b: &SpectralField,
) -> Result<(), SpectralError> {
    if a.grid != b.grid {
        return Err(SpectralError::GridMismatch {
            left: a.grid,
            right: b.grid,
        });
    }
    Ok(())
}

/// Dealiased pointwise product: inputs and output truncated to the 2/3-rule
/// band, the multiplication done on physical samples. On the band this
/// equals the exact (non-circular) coefficient convolution of the truncated
/// inputs, which is the product semantics every quadratic term in the
/// library uses.
pub fn dealiased_product(
    a: &SpectralField,
    b: &SpectralField,
) -> Result<SpectralField, SpectralError> {
    check_same_grid(a, b)?;
    let am = a.mask_retained();
    let bm = b.mask_retained();
    let pa = am.to_physical();
    let pb = bm.to_physical();
    let prod: Vec<Complex64> = pa.iter().zip(&pb).map(|(&x, &y)| x * y).collect();
    let mut out = SpectralField::from_physical_complex(a.grid, &prod)?;
    out.is_real = a.is_real && b.is_real;
    Ok(out.mask_retained())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_grid() -> GridSpec {
        GridSpec::square(16, 2.0 * std::f64::consts::PI).unwrap()
    }

    fn single_mode(grid: GridSpec, ix: usize, iy: usize, amp: Complex64) -> SpectralField {
        let mut coeffs = vec![Complex64::ZERO; grid.len()];
        coeffs[grid.index(ix, iy)] = amp;
        SpectralField::from_coeffs(grid, coeffs, false).unwrap()
    }

    #[test]
    fn grid_rejects_odd_or_tiny_axes() {
        assert!(GridSpec::new(7, 8, 1.0).is_err());
        assert!(GridSpec::new(2, 8, 1.0).is_err());
        assert!(GridSpec::new(8, 8, 0.0).is_err());
        assert!(GridSpec::new(8, 8, f64::NAN).is_err());
    }

    #[test]
    fn lattice_closed_under_negation_and_contains_zero() {
        let grid = GridSpec::new(8, 6, 3.0).unwrap();
        assert_eq!(grid.xi(0, 0), (0.0, 0.0));
        for (ix, iy) in grid.positions() {
            let (mx, my) = grid.neg_index(ix, iy);
            let (x1, y1) = grid.freq_int(ix, iy);
            let (x2, y2) = grid.freq_int(mx, my);
            // Nyquist indices are their own mirror; others negate exactly.
            if ix != grid.nx() / 2 && iy != grid.ny() / 2 {
                assert_eq!((x2, y2), (-x1, -y1));
            }
        }
    }

    #[test]
    fn constant_field_transforms_to_pure_zero_mode() {
        let grid = test_grid();
        let samples = vec![3.5; grid.len()];
        let f = SpectralField::from_physical_real(grid, &samples).unwrap();
        assert!((f.zero_mode() - Complex64::new(3.5, 0.0)).norm() < 1e-13);
        let rest: f64 = f.coeffs()[1..].iter().map(|c| c.norm()).sum();
        assert!(rest < 1e-12);
    }

    #[test]
    fn single_mode_has_one_coefficient() {
        let grid = test_grid();
        // e^{i xi0 . x} with xi0 = (2, 3) on the unit-spacing lattice.
        let samples: Vec<Complex64> = grid
            .positions()
            .map(|(px, py)| {
                let (x, y) = grid.coord(px, py);
                Complex64::cis(2.0 * x + 3.0 * y)
            })
            .collect();
        let f = SpectralField::from_physical_complex(grid, &samples).unwrap();
        for (ix, iy) in grid.positions() {
            let c = f.coeff(ix, iy);
            let want = if grid.xi(ix, iy) == (2.0, 3.0) { 1.0 } else { 0.0 };
            assert!(
                (c - Complex64::new(want, 0.0)).norm() < 1e-12,
                "coefficient at {:?} is {c}",
                grid.xi(ix, iy)
            );
        }
    }

    #[test]
    fn roundtrip_residual_below_1e12_on_random_real_field() {
        let grid = test_grid();
        // Deterministic pseudo-random samples; no RNG dependency needed here.
        let samples: Vec<f64> = (0..grid.len())
            .map(|k| ((k as f64 * 12.9898).sin() * 43758.5453).fract() - 0.5)
            .collect();
        let f = SpectralField::from_physical_real(grid, &samples).unwrap();
        assert!(f.hermitian_residual() < 1e-12);
        let back = f.to_physical_real().unwrap();
        let scale = samples.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let err = samples
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err / scale < 1e-12, "roundtrip residual {err}");
    }

    #[test]
    fn from_coeffs_validates_hermitian_flag() {
        let grid = test_grid();
        let mut coeffs = vec![Complex64::ZERO; grid.len()];
        coeffs[grid.index(1, 0)] = Complex64::new(0.0, 1.0);
        // Missing the mirror coefficient: not Hermitian.
        assert!(matches!(
            SpectralField::from_coeffs(grid, coeffs.clone(), true),
            Err(SpectralError::NotHermitian { .. })
        ));
        coeffs[grid.index(grid.nx() - 1, 0)] = Complex64::new(0.0, -1.0);
        assert!(SpectralField::from_coeffs(grid, coeffs, true).is_ok());
    }

    #[test]
    fn parseval_holds_to_1e10() {
        let grid = test_grid();
        let samples: Vec<f64> = grid
            .positions()
            .map(|(px, py)| {
                let (x, y) = grid.coord(px, py);
                (x * 0.9).sin() + (y * 1.3).cos() * 0.4
            })
            .collect();
        let f = SpectralField::from_physical_real(grid, &samples).unwrap();
        let physical: f64 = (samples.iter().map(|v| v * v).sum::<f64>() * grid.cell_area()).sqrt();
        let spectral = f.l2_norm();
        assert!((physical - spectral).abs() <= 1e-10 * physical.max(1.0));
    }

    #[test]
    fn reflect_conj_fixes_real_fields_and_involutes() {
        let grid = test_grid();
        let samples: Vec<f64> = (0..grid.len()).map(|k| (k as f64 * 0.771).sin()).collect();
        let f = SpectralField::from_physical_real(grid, &samples).unwrap();
        let rc = f.reflect_conj();
        let diff: f64 = rc
            .coeffs()
            .iter()
            .zip(f.coeffs())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "reflected conjugate moved a real field by {diff}");

        let g = single_mode(grid, 3, 2, Complex64::new(0.4, -1.1));
        let back = g.reflect_conj().reflect_conj();
        let diff: f64 = back
            .coeffs()
            .iter()
            .zip(g.coeffs())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff == 0.0);
    }

    #[test]
    fn dealiased_product_matches_exact_convolution_on_band() {
        let grid = GridSpec::square(12, 5.0).unwrap();
        let f = single_mode(grid, 1, 0, Complex64::new(1.0, 0.5));
        let g = single_mode(grid, 2, 3, Complex64::new(-0.3, 0.2));
        let prod = dealiased_product(&f, &g).unwrap();
        // Product of single modes sits at the frequency sum with the
        // amplitude product.
        for (ix, iy) in grid.positions() {
            let want = if (ix, iy) == (3, 3) {
                Complex64::new(1.0, 0.5) * Complex64::new(-0.3, 0.2)
            } else {
                Complex64::ZERO
            };
            assert!((prod.coeff(ix, iy) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn dealiased_product_kills_out_of_band_output() {
        let grid = GridSpec::square(12, 5.0).unwrap();
        // j=3 is the last retained index (3*3 < 12); its self-product lands
        // on j=6, outside the band, and must vanish entirely.
        let f = single_mode(grid, 3, 0, Complex64::ONE);
        let prod = dealiased_product(&f, &f).unwrap();
        let total: f64 = prod.coeffs().iter().map(|c| c.norm()).sum();
        assert!(total < 1e-13, "out-of-band energy {total}");
    }

    #[test]
    fn band_predicate_is_strictly_inside_one_third() {
        let grid = GridSpec::square(12, 5.0).unwrap();
        assert!(grid.retained(3, 0));
        assert!(!grid.retained(4, 0));
        let grid = GridSpec::square(256, 256.0).unwrap();
        assert!(grid.retained(85, 0));
        assert!(!grid.retained(86, 0));
    }
}
