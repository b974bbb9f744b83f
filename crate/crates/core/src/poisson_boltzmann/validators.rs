use serde::Serialize;

use super::{
    solve_pb, solve_pb_empirical, MeasureRef, ParticleConfig, PbError, PotentialSplit,
};
use crate::grid_spectral::{
    fourier_coefficients, gradient, l1_norm, real_from_fourier_coefficients, RealField,
    SpectralField, TorusGrid,
};
use crate::initial_data::mollifier_on_grid;
use crate::nbody_empirical::CdfDifference;

/// Relative slack on the unit Lipschitz bound for `V̂'`.
pub const LIP_SLACK: f64 = 0.05;

/// Margins of the elliptic estimates for one solve. Bounds that do not
/// apply to the right-hand side (or dimension) are `None`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipticBoundsReport {
    /// Largest difference quotient of `V̂'` between neighbouring nodes (1-D).
    pub hat_derivative_lipschitz: Option<f64>,
    pub lipschitz_holds: Option<bool>,
    /// `ε ||V||∞` (empirical right-hand sides).
    pub eps_sup_potential: Option<f64>,
    pub sup_bound_holds: Option<bool>,
    /// `(||e^V||₂, ||h||₂)` (smooth right-hand sides).
    pub boltzmann_l2: Option<(f64, f64)>,
    pub l2_bound_holds: Option<bool>,
}

impl EllipticBoundsReport {
    pub fn all_hold(&self) -> bool {
        [self.lipschitz_holds, self.sup_bound_holds, self.l2_bound_holds]
            .iter()
            .all(|b| b.unwrap_or(true))
    }
}

pub fn validate_elliptic_bounds(split: &PotentialSplit, source: MeasureRef) -> EllipticBoundsReport {
    let grid = *split.grid();
    let hat_derivative_lipschitz = (grid.dim() == 1).then(|| {
        let d = &gradient(split.hat())[0];
        let v = d.values();
        let n = v.len();
        (0..n)
            .map(|j| (v[(j + 1) % n] - v[j]).abs())
            .fold(0.0, f64::max)
            / grid.spacing()
    });
    let (eps_sup_potential, boltzmann_l2) = match source {
        MeasureRef::Empirical(_) => (Some(split.eps() * split.potential().sup_norm()), None),
        MeasureRef::Density(h) => (None, Some((split.boltzmann_density().l2_norm(), h.l2_norm()))),
    };
    EllipticBoundsReport {
        hat_derivative_lipschitz,
        lipschitz_holds: hat_derivative_lipschitz.map(|l| l <= 1.0 + LIP_SLACK),
        eps_sup_potential,
        sup_bound_holds: eps_sup_potential.map(|s| s <= 1.0),
        boltzmann_l2,
        l2_bound_holds: boltzmann_l2.map(|(a, b)| a <= b),
    }
}

/// Both sides of `||Ṽ₁' - Ṽ₂'||₂ + 4√ε ||V̂₁' - V̂₂'||₂ ≤ W₁(h₁, h₂)/ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct W1StabilityReport {
    pub tilde_term: f64,
    pub hat_term: f64,
    pub lhs: f64,
    pub w1: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn solve_measure(m: MeasureRef, eps: f64, grid: TorusGrid) -> Result<PotentialSplit, PbError> {
    match m {
        MeasureRef::Density(h) => solve_pb(h, eps),
        MeasureRef::Empirical(x) => solve_pb_empirical(x, eps, grid),
    }
}

/// Solves both problems on `grid` (which must match any density's grid)
/// and evaluates the 1-D `W₁` stability inequality.
///
/// `||Ṽ₁' - Ṽ₂'||₂` is differentiated spectrally when both inputs are
/// densities; otherwise it uses `Ṽ₁' - Ṽ₂' = -(G - ∫G)/ε` with `G` the exact
/// CDF difference, since `Ṽ'` jumps at every particle.
pub fn w1_stability_check(
    h1: MeasureRef,
    h2: MeasureRef,
    eps: f64,
    grid: TorusGrid,
) -> Result<W1StabilityReport, PbError> {
    if grid.dim() != 1 {
        return Err(PbError::NotOneDimensional);
    }
    for m in [h1, h2] {
        if let MeasureRef::Density(h) = m {
            if *h.grid() != grid {
                return Err(crate::grid_spectral::GridError::LengthMismatch {
                    expected: grid.len(),
                    found: h.grid().len(),
                }
                .into());
            }
        }
    }
    let s1 = solve_measure(h1, eps, grid)?;
    let s2 = solve_measure(h2, eps, grid)?;
    let diff = CdfDifference::new(h1, h2)
        .map_err(|e| PbError::NotAProbabilityDensity(e.to_string()))?;
    let tilde_term = match (h1, h2) {
        (MeasureRef::Density(_), MeasureRef::Density(_)) => {
            gradient(&(s1.tilde() - s2.tilde()))[0].l2_norm()
        }
        _ => diff.centered_l2() / eps,
    };
    let hat_diff: Vec<_> = s1
        .hat_coefficients()
        .iter()
        .zip(s2.hat_coefficients())
        .map(|(a, b)| a - b)
        .collect();
    let hat_term = 4.0
        * eps.sqrt()
        * crate::grid_spectral::dirichlet_energy_from_coefficients(&grid, &hat_diff).sqrt();
    let w1 = diff.w1();
    let lhs = tilde_term + hat_term;
    let rhs = w1 / eps;
    Ok(W1StabilityReport {
        tilde_term,
        hat_term,
        lhs,
        w1,
        rhs,
        holds: lhs <= rhs,
    })
}

/// Sup-norm change of `V` when particle `j` moves by `delta`, against the
/// bound `2|δ| / (ε^{3/2} N)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub sup_change: f64,
    pub bound: f64,
    pub ratio: f64,
}

pub fn lipschitz_in_configuration(
    x: &ParticleConfig,
    j: usize,
    delta: f64,
    eps: f64,
    grid: TorusGrid,
) -> Result<LipschitzReport, PbError> {
    if j >= x.len() {
        return Err(PbError::InvalidConfig(format!("particle index {j} out of range")));
    }
    let mut moved = x.positions().to_vec();
    moved[j] += delta;
    let moved = ParticleConfig::wrapped(moved)?;
    let v0 = solve_pb_empirical(x, eps, grid)?.potential();
    let v1 = solve_pb_empirical(&moved, eps, grid)?.potential();
    let sup_change = (&v1 - &v0).sup_norm();
    let bound = 2.0 * delta.abs() / (eps.powf(1.5) * x.len() as f64);
    Ok(LipschitzReport {
        sup_change,
        bound,
        ratio: sup_change / bound,
    })
}

/// `(||χ_r ⋆ (V₁ - V₂)||∞, ||h₁ - h₂||₁)` for two smooth densities, with
/// `χ_r` the annular mollifier of radius scale `r`.
pub fn mollified_potential_gap(
    h1: &RealField,
    h2: &RealField,
    r: f64,
    eps: f64,
) -> Result<(f64, f64), PbError> {
    let grid = *h1.grid();
    if grid.dim() != 1 {
        return Err(PbError::NotOneDimensional);
    }
    let dv = &solve_pb(h1, eps)?.potential() - &solve_pb(h2, eps)?.potential();
    let chi = mollifier_on_grid(grid, r);
    let (a, b) = (fourier_coefficients(&chi), fourier_coefficients(&dv));
    let conv: Vec<_> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let smoothed = real_from_fourier_coefficients(grid, &conv);
    Ok((smoothed.sup_norm(), l1_norm(&(h1 - h2))))
}
