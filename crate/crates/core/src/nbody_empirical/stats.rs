use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::grid_spectral::{RealField, TorusGrid};
use crate::poisson_boltzmann::{MeasureRef, ParticleConfig};

use super::{check_config, pair_energy, w1_circle, NbodyError};

/// Monte-Carlo moments for one particle number.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LargeDeviationRow {
    pub n: usize,
    pub samples: usize,
    pub mean_energy: f64,
    pub stderr_energy: f64,
    pub mean_w1_sq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LargeDeviationReport {
    pub rows: Vec<LargeDeviationRow>,
    /// Least-squares slope `-d log E[W₁²] / d log N`.
    pub w1_sq_exponent: f64,
}

/// Draws `samples` uniform configurations for each `N` and records
/// `𝓔(X_N, 1)` and `W₁(μ_{X_N}, 1)²`. Sample `i` at particle number `N` uses
/// its own ChaCha stream, so results do not depend on thread scheduling.
pub fn large_deviation_stats(
    ns: &[usize],
    samples: usize,
    seed: u64,
) -> Result<LargeDeviationReport, NbodyError> {
    let grid = TorusGrid::new(1, 8).expect("valid grid");
    let uniform = RealField::constant(grid, 1.0);
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let draws: Vec<(f64, f64)> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((n as u64) << 32) | i as u64);
                let x = ParticleConfig::new((0..n).map(|_| rng.gen::<f64>()).collect())?;
                check_config(&x)?;
                // With μ ≡ 1 the cross and self terms reduce to ∫K = -1/12.
                let energy = pair_energy(&x) + 1.0 / 12.0;
                let w1 = w1_circle(MeasureRef::Empirical(&x), MeasureRef::Density(&uniform))?;
                Ok((energy, w1 * w1))
            })
            .collect::<Result<_, NbodyError>>()?;
        let m = samples as f64;
        let mean_energy = draws.iter().map(|d| d.0).sum::<f64>() / m;
        let var = draws
            .iter()
            .map(|d| (d.0 - mean_energy).powi(2))
            .sum::<f64>()
            / (m - 1.0).max(1.0);
        rows.push(LargeDeviationRow {
            n,
            samples,
            mean_energy,
            stderr_energy: (var / m).sqrt(),
            mean_w1_sq: draws.iter().map(|d| d.1).sum::<f64>() / m,
        });
    }
    let w1_sq_exponent = -fit_slope(
        &rows
            .iter()
            .map(|r| ((r.n as f64).ln(), r.mean_w1_sq.ln()))
            .collect::<Vec<_>>(),
    );
    Ok(LargeDeviationReport {
        rows,
        w1_sq_exponent,
    })
}

/// Least-squares slope of `y` against `x`.
pub(crate) fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    if den == 0.0 {
        f64::NAN
    } else {
        num / den
    }
}
