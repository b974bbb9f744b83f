//! Modulated energy of a Schrödinger state relative to an Euler flow, its
//! parts, and the derived weak distances.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::euler_isothermal::EulerState;
use crate::grid_spectral::{complex_gradient, h_minus1_norm, l1_norm, RealField, SpectralField};
use crate::poisson_boltzmann::{PotentialSplit, MASS_TOLERANCE};
use crate::schrodinger::{current, density, total_energy, WaveFunction};

/// Below this value `m log m` is treated as zero.
pub const VACUUM_CLAMP: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModulatedError {
    #[error("reference density has nonpositive minimum {0:e}")]
    NonpositiveReference(f64),
    #[error("density is negative somewhere (min {0:e})")]
    NegativeDensity(f64),
    #[error("density integrates to {0}, not 1")]
    NotNormalized(f64),
    #[error("fields live on different grids")]
    GridMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub time: f64,
    pub kinetic_modulated: f64,
    pub field_energy: f64,
    pub relative_entropy: f64,
    pub total_modulated: f64,
    pub conserved_total: f64,
}

/// `½∫ Σ_j |iħ∂_jψ + u_jψ|²`.
pub fn kinetic_modulated(w: &WaveFunction, u: &[RealField]) -> Result<f64, ModulatedError> {
    let psi = w.psi();
    if u.len() != psi.grid().dim() || u.iter().any(|c| c.grid() != psi.grid()) {
        return Err(ModulatedError::GridMismatch);
    }
    let ih = Complex64::new(0.0, w.hbar());
    let sum: f64 = complex_gradient(psi)
        .iter()
        .zip(u)
        .map(|(d, uj)| {
            d.values()
                .iter()
                .zip(psi.values())
                .zip(uj.values())
                .map(|((dp, p), uv)| (ih * dp + uv * p).norm_sqr())
                .sum::<f64>()
        })
        .sum();
    Ok(0.5 * sum / psi.grid().len() as f64)
}

/// `∫(m log(m/ρ) - m + ρ)` with `0 log 0 = 0`.
pub fn relative_entropy(m: &RealField, rho: &RealField) -> Result<f64, ModulatedError> {
    if m.grid() != rho.grid() {
        return Err(ModulatedError::GridMismatch);
    }
    if rho.min() <= 0.0 {
        return Err(ModulatedError::NonpositiveReference(rho.min()));
    }
    if m.min() < 0.0 {
        return Err(ModulatedError::NegativeDensity(m.min()));
    }
    Ok(m
        .zip_map(rho, |mv, r| {
            if mv < VACUUM_CLAMP {
                r
            } else {
                mv * (mv.ln() - r.ln()) - mv + r
            }
        })
        .integrate())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CkpReport {
    /// `||ρ - m||₁`.
    pub l1: f64,
    /// `∫m log(m/ρ)`.
    pub entropy: f64,
    /// `√(2 ∫m log(m/ρ))`.
    pub bound: f64,
    pub holds: bool,
}

/// Checks `||ρ - m||₁ ≤ √(2∫m log(m/ρ))` for probability densities, with
/// `tolerance` absorbing quadrature error.
pub fn ckp_check(m: &RealField, rho: &RealField, tolerance: f64) -> Result<CkpReport, ModulatedError> {
    for f in [m, rho] {
        let mass = f.integrate();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(ModulatedError::NotNormalized(mass));
        }
    }
    let entropy = relative_entropy(m, rho)? - (rho.integrate() - m.integrate());
    let l1 = l1_norm(&(rho - m));
    let bound = (2.0 * entropy.max(0.0)).sqrt();
    Ok(CkpReport {
        l1,
        entropy,
        bound,
        holds: l1 <= bound + tolerance,
    })
}

/// Assembles `𝓔 = 𝓚 + (ε/2)∫|∇V|² + ∫(m log(m/ρ) - m + ρ)` with `m = e^V`.
pub fn modulated_total(
    w: &WaveFunction,
    split: &PotentialSplit,
    euler: &EulerState,
) -> Result<EnergyReport, ModulatedError> {
    if euler.grid() != w.psi().grid() || split.grid() != w.psi().grid() {
        return Err(ModulatedError::GridMismatch);
    }
    let kinetic = kinetic_modulated(w, &euler.u)?;
    let field = split.field_energy();
    let entropy = relative_entropy(&split.boltzmann_density(), &euler.rho())?;
    Ok(EnergyReport {
        time: w.time(),
        kinetic_modulated: kinetic,
        field_energy: field,
        relative_entropy: entropy,
        total_modulated: kinetic + field + entropy,
        conserved_total: total_energy(w, split).total,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakDistances {
    /// `||ρ_{ε,ħ} - ρ||_{Ḣ⁻¹}` after removing the mean of the difference.
    pub h_minus1_density_error: f64,
    /// `||m - ρ||₁`.
    pub l1_entropy_error: f64,
    /// `|∫(J - ρ_{ε,ħ}u)·b|` per test field.
    pub current_errors: Vec<f64>,
    /// `2||b||∞ √𝓚` per test field.
    pub current_bounds: Vec<f64>,
}

impl WeakDistances {
    pub fn max_current_error(&self) -> f64 {
        self.current_errors.iter().copied().fold(0.0, f64::max)
    }
}

/// `test_fields[i]` is a vector field `b` with one component per axis.
pub fn weak_distances(
    w: &WaveFunction,
    split: &PotentialSplit,
    euler: &EulerState,
    test_fields: &[Vec<RealField>],
) -> Result<WeakDistances, ModulatedError> {
    let grid = *w.psi().grid();
    if *euler.grid() != grid || *split.grid() != grid {
        return Err(ModulatedError::GridMismatch);
    }
    let rho_q = density(w);
    let rho = euler.rho();
    let diff = &rho_q - &rho;
    let mean = diff.integrate();
    let h_minus1_density_error =
        h_minus1_norm(&diff.map(|v| v - mean)).expect("mean removed");
    let l1_entropy_error = l1_norm(&(&split.boltzmann_density() - &rho));
    let j = current(w);
    let sqrt_k = kinetic_modulated(w, &euler.u)?.max(0.0).sqrt();
    let mut current_errors = Vec::with_capacity(test_fields.len());
    let mut current_bounds = Vec::with_capacity(test_fields.len());
    for b in test_fields {
        if b.len() != grid.dim() || b.iter().any(|c| *c.grid() != grid) {
            return Err(ModulatedError::GridMismatch);
        }
        let mut integral = 0.0;
        let mut sup_sq = vec![0.0; grid.len()];
        for (axis, bj) in b.iter().enumerate() {
            let flux = j[axis].zip_map(&(&rho_q * &euler.u[axis]), |a, c| a - c);
            integral += (&flux * bj).integrate();
            for (s, v) in sup_sq.iter_mut().zip(bj.values()) {
                *s += v * v;
            }
        }
        let sup_b = sup_sq.iter().copied().fold(0.0, f64::max).sqrt();
        current_errors.push(integral.abs());
        current_bounds.push(2.0 * sup_b * sqrt_k);
    }
    Ok(WeakDistances {
        h_minus1_density_error,
        l1_entropy_error,
        current_errors,
        current_bounds,
    })
}

/// The fields `b·e₁` for `b ∈ {1, sin 2πx, cos 2πx}`.
pub fn default_test_fields(grid: crate::grid_spectral::TorusGrid) -> Vec<Vec<RealField>> {
    let tau = 2.0 * std::f64::consts::PI;
    let profiles: [fn(f64) -> f64; 3] = [|_| 1.0, f64::sin, f64::cos];
    profiles
        .iter()
        .map(|f| {
            let mut b = vec![RealField::zeros(grid); grid.dim()];
            b[0] = RealField::from_fn(grid, |p| f(tau * p[0]));
            b
        })
        .collect()
}

#[cfg(test)]
mod tests;
