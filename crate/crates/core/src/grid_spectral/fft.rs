//! FFT plumbing over `rustfft` with a process-wide plan cache.
//!
//! Spectral coefficients are unnormalized on the forward transform; the
//! inverse divides by the number of nodes, so `inverse(forward(f)) == f`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::TorusGrid;

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((len, forward))
        .or_insert_with(|| {
            let direction = if forward {
                FftDirection::Forward
            } else {
                FftDirection::Inverse
            };
            FftPlanner::new().plan_fft(len, direction)
        })
        .clone()
}

fn transpose(n: usize, data: &mut [Complex64]) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

fn transform(grid: &TorusGrid, data: &mut [Complex64], forward: bool) {
    let n = grid.points_per_axis();
    let fft = plan(n, forward);
    // rustfft processes every consecutive chunk of length n.
    fft.process(data);
    if grid.dim() == 2 {
        transpose(n, data);
        fft.process(data);
        transpose(n, data);
    }
}

pub(crate) fn forward(grid: &TorusGrid, data: &mut [Complex64]) {
    transform(grid, data, true);
}

pub(crate) fn inverse(grid: &TorusGrid, data: &mut [Complex64]) {
    transform(grid, data, false);
    let scale = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|z| *z *= scale);
}

/// Inverse transform without the `1/N` factor: synthesizes samples from
/// normalized coefficients.
pub(crate) fn synthesize(grid: &TorusGrid, data: &mut [Complex64]) {
    transform(grid, data, false);
}
