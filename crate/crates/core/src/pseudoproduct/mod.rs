//! Fourier-side bilinear and trilinear operators `T_m` with explicit
//! symbols.
//!
//! A bilinear symbol `m(xi, eta)` acts on coefficient fields by the
//! frequency-space quadrature
//!
//! ```text
//! T_m(F, G)^(xi) = sum_eta m(xi, eta) F^(xi - eta) G^(eta) * deta,
//! ```
//!
//! the lattice stand-in for the continuum integral, with cell measure
//! `deta = (2*pi/L)^2`. A trilinear symbol `m(xi, eta, sigma)` acts the
//! same way on three factors, read at `xi - eta`, `eta - sigma`, and
//! `sigma`, weighted by `deta^2`.
//!
//! Every frequency in the sum, the inner variable `eta` (and `sigma`)
//! included, is restricted to the dealiased band of the grid (the strict
//! 2/3 rule shared with [`crate::spectral::dealiased_product`]); inputs are
//! read only on the band and outputs are supported on it. Contributions
//! that would leave the lattice are thereby dropped, which is the discrete
//! analogue of truncating the frequency integral, and it makes the nested
//! and pointwise fast paths agree with direct quadrature exactly instead
//! of up to aliasing.
//!
//! A symbol may carry a separable factorization. For bilinear symbols this
//! is a sum of terms `c_k(xi) a_k(xi - eta) b_k(eta)`, each applied as
//! multiplier -> pointwise physical product -> multiplier, turning the
//! quadrature into FFT work. For trilinear symbols it is an outer/inner
//! pair `a(xi, eta) b(eta, sigma)`, applied as nested bilinear operators.
//! Factorizations are declared, not inferred; their consistency with the
//! evaluator is checked by tests against
//! [`FACTORIZATION_CONSISTENCY_TOL`], and fast paths must match direct
//! quadrature within [`FAST_PATH_EQUIVALENCE_TOL`].
//!
//! Symbol evaluators take continuum wavenumbers and must be pure and
//! thread-safe; the catalogued symbols of the quadratic interaction live
//! in [`catalogue`] (re-exported here).

mod catalogue;

pub use catalogue::{
    m0_over_phase, m0_symbol, m0_symbol_symmetrized, m1_symbol, FactorSlot, QuadraticTermSpec,
    M0_GROWTH_CONSTANT, PHASE_DIVISOR_FLOOR,
};

use crate::phase_geometry::Vec2;
use crate::spectral::{check_same_grid, dealiased_product, GridSpec, SpectralError, SpectralField};
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

/// Declared factorizations must reproduce the evaluator to this tolerance
/// at sampled lattice points.
pub const FACTORIZATION_CONSISTENCY_TOL: f64 = 1e-12;

/// Fast paths must match direct quadrature to this relative tolerance.
pub const FAST_PATH_EQUIVALENCE_TOL: f64 = 1e-10;

/// Largest per-axis size admitted by the direct trilinear quadrature; the
/// triple band sum is O(B^3) in the band size B and becomes impractical
/// beyond this.
pub const MAX_DIRECT_TRILINEAR_AXIS: usize = 32;

/// A scalar factor of a separable term, evaluated at one frequency.
pub type PointFn = Arc<dyn Fn(Vec2) -> Complex64 + Send + Sync>;

/// A bilinear symbol evaluator.
pub type PairFn = Arc<dyn Fn(Vec2, Vec2) -> Complex64 + Send + Sync>;

/// A trilinear symbol evaluator.
pub type TripleFn = Arc<dyn Fn(Vec2, Vec2, Vec2) -> Complex64 + Send + Sync>;

/// Errors from pseudoproduct application.
#[derive(Debug, Error)]
pub enum PseudoproductError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("symbol carries no separable factorization; the fast path needs one")]
    MissingFactorization,
    #[error(
        "direct trilinear quadrature is limited to {max}x{max} grids, got {nx}x{ny}; \
         use a separable factorization"
    )]
    GridTooLarge { nx: usize, ny: usize, max: usize },
}

/// One term `out(xi) * left(xi - eta) * right(eta)` of a separable
/// factorization.
#[derive(Clone)]
pub struct SeparableTerm {
    /// Factor in the output frequency `xi`.
    pub out: PointFn,
    /// Factor in the first slot's frequency `xi - eta`.
    pub left: PointFn,
    /// Factor in the second slot's frequency `eta`.
    pub right: PointFn,
}

impl SeparableTerm {
    pub fn value(&self, xi: Vec2, eta: Vec2) -> Complex64 {
        (self.out)(xi) * (self.left)(xi - eta) * (self.right)(eta)
    }
}

/// A bilinear frequency-space symbol, with an optional separable
/// factorization enabling the FFT fast path.
#[derive(Clone)]
pub struct BilinearSymbol {
    evaluator: PairFn,
    factorization: Option<Vec<SeparableTerm>>,
}

impl BilinearSymbol {
    pub fn new<E>(evaluator: E) -> Self
    where
        E: Fn(Vec2, Vec2) -> Complex64 + Send + Sync + 'static,
    {
        BilinearSymbol {
            evaluator: Arc::new(evaluator),
            factorization: None,
        }
    }

    /// Attach a separable factorization whose terms sum to the evaluator.
    pub fn with_factorization(mut self, terms: Vec<SeparableTerm>) -> Self {
        self.factorization = Some(terms);
        self
    }

    pub fn eval(&self, xi: Vec2, eta: Vec2) -> Complex64 {
        (self.evaluator)(xi, eta)
    }

    pub fn factorization(&self) -> Option<&[SeparableTerm]> {
        self.factorization.as_deref()
    }

    pub fn has_factorization(&self) -> bool {
        self.factorization.is_some()
    }

    /// Value of the factorized sum, when declared.
    pub fn factorization_value(&self, xi: Vec2, eta: Vec2) -> Option<Complex64> {
        let terms = self.factorization.as_ref()?;
        Some(terms.iter().map(|t| t.value(xi, eta)).sum())
    }

    /// Largest deviation of the factorized sum from the evaluator over the
    /// given points; `None` when no factorization is declared.
    pub fn factorization_residual(&self, points: &[(Vec2, Vec2)]) -> Option<f64> {
        self.factorization.as_ref()?;
        let worst = points
            .iter()
            .map(|&(xi, eta)| {
                (self.factorization_value(xi, eta).unwrap() - self.eval(xi, eta)).norm()
            })
            .fold(0.0f64, f64::max);
        Some(worst)
    }
}

/// Outer/inner pair of a separable trilinear symbol
/// `m(xi, eta, sigma) = outer(xi, eta) * inner(eta, sigma)`.
#[derive(Clone)]
pub struct TrilinearFactors {
    pub outer: BilinearSymbol,
    pub inner: BilinearSymbol,
}

/// A trilinear frequency-space symbol, with an optional outer/inner
/// factorization enabling the nested-bilinear fast path.
#[derive(Clone)]
pub struct TrilinearSymbol {
    evaluator: TripleFn,
    factorization: Option<TrilinearFactors>,
}

impl TrilinearSymbol {
    pub fn new<E>(evaluator: E) -> Self
    where
        E: Fn(Vec2, Vec2, Vec2) -> Complex64 + Send + Sync + 'static,
    {
        TrilinearSymbol {
            evaluator: Arc::new(evaluator),
            factorization: None,
        }
    }

    pub fn with_factorization(mut self, factors: TrilinearFactors) -> Self {
        self.factorization = Some(factors);
        self
    }

    pub fn eval(&self, xi: Vec2, eta: Vec2, sigma: Vec2) -> Complex64 {
        (self.evaluator)(xi, eta, sigma)
    }

    pub fn factorization(&self) -> Option<&TrilinearFactors> {
        self.factorization.as_ref()
    }

    /// Largest deviation of `outer * inner` from the evaluator over the
    /// given points; `None` when no factorization is declared.
    pub fn factorization_residual(&self, points: &[(Vec2, Vec2, Vec2)]) -> Option<f64> {
        let factors = self.factorization.as_ref()?;
        let worst = points
            .iter()
            .map(|&(xi, eta, sigma)| {
                let product = factors.outer.eval(xi, eta) * factors.inner.eval(eta, sigma);
                (product - self.eval(xi, eta, sigma)).norm()
            })
            .fold(0.0f64, f64::max);
        Some(worst)
    }
}

/// Band positions of a grid, each with its storage index, integer
/// frequency, and wavenumber, gathered once per application.
struct Band {
    entries: Vec<BandEntry>,
    grid: GridSpec,
}

struct BandEntry {
    storage: usize,
    j: (i64, i64),
    wave: Vec2,
}

impl Band {
    fn new(grid: GridSpec) -> Self {
        let entries = grid
            .retained_positions()
            .map(|(ix, iy)| {
                let (x, y) = grid.xi(ix, iy);
                BandEntry {
                    storage: grid.index(ix, iy),
                    j: grid.freq_int(ix, iy),
                    wave: Vec2::new(x, y),
                }
            })
            .collect();
        Band { entries, grid }
    }

    fn contains(&self, j1: i64, j2: i64) -> bool {
        3 * j1.abs() < self.grid.nx() as i64 && 3 * j2.abs() < self.grid.ny() as i64
    }

    /// Storage index of an in-band integer frequency. Band integers are
    /// well inside the symmetric range, so the wrap is a plain modulus.
    fn storage_of(&self, j1: i64, j2: i64) -> usize {
        let ix = j1.rem_euclid(self.grid.nx() as i64) as usize;
        let iy = j2.rem_euclid(self.grid.ny() as i64) as usize;
        self.grid.index(ix, iy)
    }

}

/// Direct quadrature `T_m(F, G)`: the band-restricted frequency sum,
/// weighted by the cell measure. Cost is quadratic in the band size.
pub fn bilinear_apply(
    m: &BilinearSymbol,
    f: &SpectralField,
    g: &SpectralField,
) -> Result<SpectralField, PseudoproductError> {
    check_same_grid(f, g)?;
    let grid = f.grid();
    let band = Band::new(grid);
    let weight = grid.delta_eta();
    let mut coeffs = vec![Complex64::ZERO; grid.len()];
    for out in &band.entries {
        let mut acc = Complex64::ZERO;
        for inner in &band.entries {
            let (d1, d2) = (out.j.0 - inner.j.0, out.j.1 - inner.j.1);
            if !band.contains(d1, d2) {
                continue;
            }
            let fv = f.coeffs()[band.storage_of(d1, d2)];
            let gv = g.coeffs()[inner.storage];
            if fv == Complex64::ZERO || gv == Complex64::ZERO {
                continue;
            }
            acc += m.eval(out.wave, inner.wave) * fv * gv;
        }
        coeffs[out.storage] = acc * weight;
    }
    Ok(SpectralField::from_coeffs(grid, coeffs, false)?)
}

/// Apply a frequency-pointwise factor to a field's coefficients.
fn pointwise_factor(f: &SpectralField, factor: &PointFn) -> SpectralField {
    let grid = f.grid();
    f.map_coeffs(false, |ix, iy, c| {
        let (x, y) = grid.xi(ix, iy);
        factor(Vec2::new(x, y)) * c
    })
}

/// FFT fast path for a separably factorized symbol: each term becomes
/// multiplier -> dealiased pointwise product -> multiplier. Matches
/// [`bilinear_apply`] within [`FAST_PATH_EQUIVALENCE_TOL`].
pub fn bilinear_apply_separable(
    m: &BilinearSymbol,
    f: &SpectralField,
    g: &SpectralField,
) -> Result<SpectralField, PseudoproductError> {
    let terms = m.factorization().ok_or(PseudoproductError::MissingFactorization)?;
    check_same_grid(f, g)?;
    let grid = f.grid();
    let mut acc = SpectralField::zeros(grid);
    for term in terms {
        let left = pointwise_factor(f, &term.left);
        let right = pointwise_factor(g, &term.right);
        let product = dealiased_product(&left, &right)?;
        acc = acc.add(&pointwise_factor(&product, &term.out))?;
    }
    Ok(acc.scale(Complex64::new(grid.delta_eta(), 0.0)))
}

/// Direct trilinear quadrature: the triple band-restricted sum, weighted
/// by the squared cell measure. Limited to small grids; see
/// [`MAX_DIRECT_TRILINEAR_AXIS`].
pub fn trilinear_apply(
    m: &TrilinearSymbol,
    f: &SpectralField,
    g: &SpectralField,
    h: &SpectralField,
) -> Result<SpectralField, PseudoproductError> {
    check_same_grid(f, g)?;
    check_same_grid(f, h)?;
    let grid = f.grid();
    if grid.nx() > MAX_DIRECT_TRILINEAR_AXIS || grid.ny() > MAX_DIRECT_TRILINEAR_AXIS {
        return Err(PseudoproductError::GridTooLarge {
            nx: grid.nx(),
            ny: grid.ny(),
            max: MAX_DIRECT_TRILINEAR_AXIS,
        });
    }
    let band = Band::new(grid);
    let weight = grid.delta_eta() * grid.delta_eta();
    let mut coeffs = vec![Complex64::ZERO; grid.len()];
    for out in &band.entries {
        let mut acc = Complex64::ZERO;
        for mid in &band.entries {
            let (d1, d2) = (out.j.0 - mid.j.0, out.j.1 - mid.j.1);
            if !band.contains(d1, d2) {
                continue;
            }
            let fv = f.coeffs()[band.storage_of(d1, d2)];
            if fv == Complex64::ZERO {
                continue;
            }
            for last in &band.entries {
                let (s1, s2) = (mid.j.0 - last.j.0, mid.j.1 - last.j.1);
                if !band.contains(s1, s2) {
                    continue;
                }
                let gv = g.coeffs()[band.storage_of(s1, s2)];
                let hv = h.coeffs()[last.storage];
                if gv == Complex64::ZERO || hv == Complex64::ZERO {
                    continue;
                }
                acc += m.eval(out.wave, mid.wave, last.wave) * fv * gv * hv;
            }
        }
        coeffs[out.storage] = acc * weight;
    }
    Ok(SpectralField::from_coeffs(grid, coeffs, false)?)
}

/// Nested fast path for an outer/inner factorized trilinear symbol:
/// `T_m(F, G, H) = T_outer(F, T_inner(G, H))`. Each bilinear stage takes
/// its own fast path when it carries a factorization, and falls back to
/// direct quadrature otherwise.
pub fn trilinear_apply_separable(
    m: &TrilinearSymbol,
    f: &SpectralField,
    g: &SpectralField,
    h: &SpectralField,
) -> Result<SpectralField, PseudoproductError> {
    let factors = m.factorization().ok_or(PseudoproductError::MissingFactorization)?;
    let inner = bilinear_apply_best(&factors.inner, g, h)?;
    bilinear_apply_best(&factors.outer, f, &inner)
}

/// Fast path when available, direct quadrature otherwise.
pub fn bilinear_apply_best(
    m: &BilinearSymbol,
    f: &SpectralField,
    g: &SpectralField,
) -> Result<SpectralField, PseudoproductError> {
    if m.has_factorization() {
        bilinear_apply_separable(m, f, g)
    } else {
        bilinear_apply(m, f, g)
    }
}
