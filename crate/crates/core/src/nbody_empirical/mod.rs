//! 1-D N-particle functionals built on the periodic Green function `K`:
//! the renormalized energy, coercivity and commutator measurements, circular
//! `W₁`, and Monte-Carlo statistics for uniformly sampled configurations.

mod stats;
mod wasserstein;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::grid_spectral::{fourier_coefficients, gradient, RealField, SpectralField};
use crate::poisson_boltzmann::{GreenKernel1D, ParticleConfig, PbError, MASS_TOLERANCE};

pub use stats::{large_deviation_stats, LargeDeviationReport, LargeDeviationRow};
pub use wasserstein::{w1_circle, CdfDifference};

/// Largest configuration accepted by the O(N²) pair sums.
pub const MAX_PARTICLES: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NbodyError {
    #[error("measure must live on a 1-D grid")]
    NotOneDimensional,
    #[error("measure is not a probability density")]
    NotAProbability,
    #[error("{0} particles exceeds the cap of {MAX_PARTICLES}")]
    TooManyParticles(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Pb(#[from] PbError),
}

fn check_config(x: &ParticleConfig) -> Result<(), NbodyError> {
    if x.len() > MAX_PARTICLES {
        return Err(NbodyError::TooManyParticles(x.len()));
    }
    Ok(())
}

fn check_density(mu: &RealField) -> Result<(), NbodyError> {
    if mu.grid().dim() != 1 {
        return Err(NbodyError::NotOneDimensional);
    }
    if mu.min() < 0.0 || (mu.integrate() - 1.0).abs() > MASS_TOLERANCE {
        return Err(NbodyError::NotAProbability);
    }
    Ok(())
}

/// Periodic linear interpolation of grid samples at `x`.
pub fn interpolate_linear(f: &RealField, x: f64) -> f64 {
    let v = f.values();
    let n = v.len();
    let s = x.rem_euclid(1.0) * n as f64;
    let j = (s.floor() as usize).min(n - 1);
    let t = s - j as f64;
    (1.0 - t) * v[j] + t * v[(j + 1) % n]
}

/// `(K ⋆ μ)` and `∬K dμdμ` from the Fourier symbol of `K`.
struct KernelPotential {
    coeffs: Vec<(f64, Complex64)>,
    self_energy: f64,
}

impl KernelPotential {
    fn new(mu: &RealField) -> Self {
        let grid = *mu.grid();
        let hat = fourier_coefficients(mu);
        let n = grid.points_per_axis();
        let mut coeffs = Vec::with_capacity(n);
        let mut self_energy = 0.0;
        for (m, c) in hat.iter().enumerate() {
            let k = grid.wavenumber(m);
            let kk = GreenKernel1D::fourier(k);
            self_energy += kk * c.norm_sqr();
            if grid.is_nyquist(m) {
                // Cosine form keeps the interpolant real.
                coeffs.push((k as f64, 0.5 * kk * c));
                coeffs.push((-(k as f64), 0.5 * kk * c));
            } else {
                coeffs.push((k as f64, kk * c));
            }
        }
        Self {
            coeffs,
            self_energy,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let tau = 2.0 * std::f64::consts::PI;
        self.coeffs
            .iter()
            .map(|(k, c)| (c * Complex64::from_polar(1.0, tau * k * x)).re)
            .sum()
    }
}

/// `𝓔(X_N, μ)` together with its counterterm `(1 + ||μ||∞)/N²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RenormalizedEnergy {
    pub value: f64,
    pub n: usize,
    pub counterterm: f64,
}

impl RenormalizedEnergy {
    pub fn augmented(&self) -> f64 {
        self.value + self.counterterm
    }
}

/// `(1/N²) Σ_{i,j} K(x_i - x_j)`; the diagonal vanishes since `K(0) = 0`.
pub fn pair_energy(x: &ParticleConfig) -> f64 {
    let p = x.positions();
    let n = p.len() as f64;
    let mut sum = 0.0;
    for (i, &xi) in p.iter().enumerate() {
        for &xj in &p[i + 1..] {
            sum += GreenKernel1D::value(xi - xj);
        }
    }
    2.0 * sum / (n * n)
}

pub fn renormalized_energy(
    x: &ParticleConfig,
    mu: &RealField,
) -> Result<RenormalizedEnergy, NbodyError> {
    check_config(x)?;
    check_density(mu)?;
    let kp = KernelPotential::new(mu);
    let n = x.len() as f64;
    let cross: f64 = x.positions().iter().map(|&xi| kp.eval(xi)).sum::<f64>() / n;
    Ok(RenormalizedEnergy {
        value: pair_energy(x) - 2.0 * cross + kp.self_energy,
        n: x.len(),
        counterterm: (1.0 + mu.sup_norm()) / (n * n),
    })
}

/// Measured terms of the coercivity inequality at `λ = 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoercivityReport {
    /// `|∫φ d(μ_X - μ)|`.
    pub lhs: f64,
    /// `||∇φ||∞ N^{-1/2}`.
    pub sup_term: f64,
    /// `||∇φ||₂ (𝓔 + counterterm)^{1/2}`.
    pub energy_term: f64,
    /// Smallest `C` with `lhs ≤ C·sup_term + energy_term`.
    pub implied_constant: f64,
}

pub fn coercivity_check(
    x: &ParticleConfig,
    mu: &RealField,
    phi: &RealField,
) -> Result<CoercivityReport, NbodyError> {
    if phi.grid() != mu.grid() {
        return Err(NbodyError::GridMismatch);
    }
    let energy = renormalized_energy(x, mu)?;
    let n = x.len() as f64;
    let interp = crate::grid_spectral::TrigInterpolant::new(phi);
    let empirical: f64 = x.positions().iter().map(|&xi| interp.eval(xi)).sum::<f64>() / n;
    let lhs = (empirical - (phi * mu).integrate()).abs();
    let grad = &gradient(phi)[0];
    let sup_term = grad.sup_norm() / n.sqrt();
    let energy_term = grad.l2_norm() * energy.augmented().max(0.0).sqrt();
    let implied_constant = if sup_term > 0.0 {
        ((lhs - energy_term) / sup_term).max(0.0)
    } else {
        0.0
    };
    Ok(CoercivityReport {
        lhs,
        sup_term,
        energy_term,
        implied_constant,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CommutatorReport {
    pub value: f64,
    pub energy: RenormalizedEnergy,
    /// `value / (𝓔 + counterterm)`.
    pub ratio: f64,
}

/// `∬_{x≠y} (u(x) - u(y)) K'(x - y) d(μ_X - μ)^{⊗2}`.
///
/// Particle pairs are summed directly with `i = j` excluded; the terms
/// involving `μ` use trapezoid quadrature on the grid, with `u` and `μ`
/// linearly interpolated at particle positions.
pub fn commutator_functional(
    x: &ParticleConfig,
    mu: &RealField,
    u: &RealField,
) -> Result<CommutatorReport, NbodyError> {
    if u.grid() != mu.grid() {
        return Err(NbodyError::GridMismatch);
    }
    let energy = renormalized_energy(x, mu)?;
    let p = x.positions();
    let n = p.len() as f64;
    let ux: Vec<f64> = p.iter().map(|&xi| interpolate_linear(u, xi)).collect();

    let mut pairs = 0.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            pairs += (ux[i] - ux[j]) * GreenKernel1D::derivative(p[i] - p[j]);
        }
    }
    pairs *= 2.0 / (n * n);

    let grid = *mu.grid();
    let h = grid.spacing();
    let nodes = grid.axis_nodes();
    let (uv, mv) = (u.values(), mu.values());
    let cross: f64 = p
        .iter()
        .zip(&ux)
        .map(|(&xi, &ui)| {
            nodes
                .iter()
                .zip(uv.iter().zip(mv))
                .map(|(&y, (&uy, &my))| (ui - uy) * GreenKernel1D::derivative(xi - y) * my)
                .sum::<f64>()
                * h
        })
        .sum::<f64>()
        / n;
    let mut smooth = 0.0;
    for a in 0..nodes.len() {
        for b in 0..nodes.len() {
            smooth += (uv[a] - uv[b]) * GreenKernel1D::derivative(nodes[a] - nodes[b]) * mv[a] * mv[b];
        }
    }
    smooth *= h * h;

    let value = pairs - 2.0 * cross + smooth;
    Ok(CommutatorReport {
        value,
        energy,
        ratio: value / energy.augmented(),
    })
}
