//! Two-dimensional FFT plumbing on row-major complex buffers.
//!
//! Plans are cached per axis length in a process-wide planner. Transforms
//! are unnormalized in both directions; callers apply the 1/(nx*ny) factor
//! that turns forward output into Fourier-series coefficients.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Direction {
    Forward,
    Inverse,
}

static PLANS: OnceLock<Mutex<PlanCache>> = OnceLock::new();

struct PlanCache {
    planner: FftPlanner<f64>,
    plans: HashMap<(usize, Direction), Arc<dyn Fft<f64>>>,
}

fn plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    let cache = PLANS.get_or_init(|| {
        Mutex::new(PlanCache {
            planner: FftPlanner::new(),
            plans: HashMap::new(),
        })
    });
    let mut cache = cache.lock().expect("FFT plan cache poisoned");
    if let Some(p) = cache.plans.get(&(n, dir)) {
        return Arc::clone(p);
    }
    let p = match dir {
        Direction::Forward => cache.planner.plan_fft_forward(n),
        Direction::Inverse => cache.planner.plan_fft_inverse(n),
    };
    cache.plans.insert((n, dir), Arc::clone(&p));
    p
}

fn transform_rows(data: &mut [Complex64], row_len: usize, dir: Direction) {
    let fft = plan(row_len, dir);
    let mut scratch = vec![Complex64::ZERO; fft.get_inplace_scratch_len()];
    for row in data.chunks_exact_mut(row_len) {
        fft.process_with_scratch(row, &mut scratch);
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

/// Unnormalized 2D DFT of a row-major `ny` x `nx` buffer, in place.
pub(crate) fn dft2(data: &mut [Complex64], nx: usize, ny: usize, inverse: bool) {
    debug_assert_eq!(data.len(), nx * ny);
    let dir = if inverse {
        Direction::Inverse
    } else {
        Direction::Forward
    };
    transform_rows(data, nx, dir);
    let mut scratch = vec![Complex64::ZERO; data.len()];
    transpose(data, &mut scratch, ny, nx);
    transform_rows(&mut scratch, ny, dir);
    transpose(&scratch, data, nx, ny);
}
