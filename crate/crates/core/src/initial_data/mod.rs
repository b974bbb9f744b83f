//! Well-prepared initial wave functions, i.i.d. particle sampling, and
//! mollified empirical measures.

mod quadrature;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid_spectral::{
    dirichlet_energy, laplacian, ComplexField, RealField, SpectralField, TorusGrid,
};
use crate::poisson_boltzmann::{ParticleConfig, MASS_TOLERANCE};
use crate::schrodinger::{SchrodingerError, WaveFunction};

pub use quadrature::gauss_legendre;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InitialDataError {
    #[error("e^V0 - eps ΔV0 is not positive (min {min:e}); eps too large for this rho0")]
    NotPositive { min: f64 },
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Wave(#[from] SchrodingerError),
}

/// `(ρ₀, U₀, ε, ħ)` for the construction `ψ = √(e^{V₀} - εΔV₀) e^{iU₀/ħ}`
/// with `V₀ = log ρ₀`.
#[derive(Clone, Debug)]
pub struct WellPreparedSpec {
    pub rho0: RealField,
    pub u0: RealField,
    pub eps: f64,
    pub hbar: f64,
}

impl WellPreparedSpec {
    /// `ρ₀ ∝ exp(a Σ_j cos 2πx_j)`, `U₀ = b Σ_j sin(2πx_j)/(2π)`, with `ρ₀`
    /// normalized on the grid.
    pub fn cosine_profile(grid: TorusGrid, a: f64, b: f64, eps: f64, hbar: f64) -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        let dim = grid.dim();
        let raw = RealField::from_fn(grid, |p| {
            (a * p[..dim].iter().map(|x| (tau * x).cos()).sum::<f64>()).exp()
        });
        let mass = raw.integrate();
        Self {
            rho0: raw.scaled(1.0 / mass),
            u0: RealField::from_fn(grid, |p| {
                b * p[..dim].iter().map(|x| (tau * x).sin()).sum::<f64>() / tau
            }),
            eps,
            hbar,
        }
    }

    /// `V₀ = log ρ₀`.
    pub fn v0(&self) -> RealField {
        self.rho0.map(f64::ln)
    }

    /// `e^{V₀} - εΔV₀`.
    pub fn amplitude_squared(&self) -> RealField {
        &self.rho0 - &laplacian(&self.v0()).scaled(self.eps)
    }

    /// `(ħ²/2)||∇√(e^{V₀} - εΔV₀)||₂² + (ε/2)||∇V₀||₂²`.
    pub fn closed_form_energy(&self) -> Result<f64, InitialDataError> {
        let a2 = self.amplitude_squared();
        check_positive(&a2)?;
        Ok(0.5 * self.hbar * self.hbar * dirichlet_energy(&a2.map(f64::sqrt))
            + 0.5 * self.eps * dirichlet_energy(&self.v0()))
    }

    fn validate(&self) -> Result<(), InitialDataError> {
        if self.rho0.grid() != self.u0.grid() {
            return Err(InitialDataError::InvalidParameter(
                "rho0 and U0 live on different grids".into(),
            ));
        }
        if !(self.eps > 0.0 && self.hbar > 0.0) {
            return Err(InitialDataError::InvalidParameter(format!(
                "eps = {}, hbar = {}",
                self.eps, self.hbar
            )));
        }
        if self.rho0.min() <= 0.0 {
            return Err(InitialDataError::InvalidDensity("rho0 must be positive".into()));
        }
        let mass = self.rho0.integrate();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(InitialDataError::InvalidDensity(format!("mass {mass}")));
        }
        Ok(())
    }
}

fn check_positive(a2: &RealField) -> Result<(), InitialDataError> {
    let min = a2.min();
    if min <= 0.0 {
        return Err(InitialDataError::NotPositive { min });
    }
    Ok(())
}

pub fn well_prepared(spec: &WellPreparedSpec) -> Result<WaveFunction, InitialDataError> {
    spec.validate()?;
    let a2 = spec.amplitude_squared();
    check_positive(&a2)?;
    let grid = *a2.grid();
    let inv_hbar = 1.0 / spec.hbar;
    let vals = a2
        .values()
        .iter()
        .zip(spec.u0.values())
        .map(|(m, u)| Complex64::from_polar(m.sqrt(), u * inv_hbar))
        .collect();
    let psi = ComplexField::from_values(grid, vals)
        .map_err(|e| InitialDataError::InvalidParameter(e.to_string()))?;
    Ok(WaveFunction::new(psi, spec.hbar, spec.eps, 0.0)?)
}

/// Cumulative masses of the periodic linear interpolant of `rho` at the
/// nodes, `C[0] = 0`, `C[n] = ∫ρ`.
fn node_cdf(rho: &RealField) -> Vec<f64> {
    let v = rho.values();
    let n = v.len();
    let h = rho.grid().spacing();
    let mut c = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    c.push(0.0);
    for j in 0..n {
        acc += 0.5 * h * (v[j] + v[(j + 1) % n]);
        c.push(acc);
    }
    c
}

/// `N` i.i.d. draws from `rho` by inverting the CDF of its periodic linear
/// interpolant. Deterministic given `seed`.
pub fn sample_iid(rho: &RealField, n: usize, seed: u64) -> Result<ParticleConfig, InitialDataError> {
    if rho.grid().dim() != 1 {
        return Err(InitialDataError::InvalidDensity("sampling is 1-D".into()));
    }
    if rho.min() < 0.0 || (rho.integrate() - 1.0).abs() > MASS_TOLERANCE {
        return Err(InitialDataError::InvalidDensity(
            "rho must be a nonnegative probability density".into(),
        ));
    }
    if n == 0 {
        return Err(InitialDataError::InvalidParameter("N must be positive".into()));
    }
    let cdf = node_cdf(rho);
    let total = cdf[cdf.len() - 1];
    let v = rho.values();
    let m = v.len();
    let h = rho.grid().spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..n)
        .map(|_| {
            let target = rng.gen::<f64>() * total;
            let j = (cdf.partition_point(|c| *c <= target) - 1).min(m - 1);
            let d = target - cdf[j];
            let r0 = v[j];
            let slope = (v[(j + 1) % m] - r0) / h;
            // r0 t + slope t²/2 = d, in the cancellation-free form.
            let disc = (r0 * r0 + 2.0 * slope * d).max(0.0);
            let denom = r0 + disc.sqrt();
            let t = if denom > 0.0 { 2.0 * d / denom } else { 0.0 };
            (j as f64 * h + t.clamp(0.0, h)).rem_euclid(1.0)
        })
        .collect::<Vec<_>>();
    ParticleConfig::wrapped(positions).map_err(|e| InitialDataError::InvalidParameter(e.to_string()))
}

/// Inner and outer radii of the annular bump, before scaling by `η`.
pub const ANNULUS: (f64, f64) = (3.0 / 16.0, 0.25);

/// Unnormalized smooth bump on `ANNULUS.0 < |z| < ANNULUS.1`.
pub fn annular_profile(z: f64) -> f64 {
    let (a, b) = ANNULUS;
    let r = z.abs();
    if r <= a || r >= b {
        return 0.0;
    }
    let s = (r - a) * (b - r) / ((b - a) * (b - a));
    (-1.0 / (4.0 * s)).exp()
}

const CELL_QUADRATURE_POINTS: usize = 24;

/// Cell masses of `χ_η(· - x)` on the grid cells centred at the nodes,
/// normalized to total mass one.
fn mollified_dirac_masses(grid: TorusGrid, x: f64, eta: f64) -> Vec<(usize, f64)> {
    let (a, b) = ANNULUS;
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let (nodes, weights) = gauss_legendre(CELL_QUADRATURE_POINTS);
    let mut masses: Vec<(usize, f64)> = Vec::new();
    for (lo, hi) in [(x + a * eta, x + b * eta), (x - b * eta, x - a * eta)] {
        // Cells are [y_j - h/2, y_j + h/2); walk the ones meeting [lo, hi].
        let first = ((lo / h) + 0.5).floor() as i64;
        let last = ((hi / h) + 0.5).floor() as i64;
        for c in first..=last {
            let cl = (c as f64 - 0.5) * h;
            let (s, e) = (lo.max(cl), hi.min(cl + h));
            if e <= s {
                continue;
            }
            let mid = 0.5 * (s + e);
            let half = 0.5 * (e - s);
            let mass: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(t, w)| w * half * annular_profile((mid + half * t - x) / eta))
                .sum();
            masses.push((c.rem_euclid(n as i64) as usize, mass));
        }
    }
    let total: f64 = masses.iter().map(|m| m.1).sum();
    masses.iter_mut().for_each(|m| m.1 /= total);
    masses
}

/// `χ_η` centred at the origin as a grid density (cell averages).
pub fn mollifier_on_grid(grid: TorusGrid, eta: f64) -> RealField {
    let mut vals = vec![0.0; grid.len()];
    let inv_h = 1.0 / grid.spacing();
    for (j, m) in mollified_dirac_masses(grid, 0.0, eta) {
        vals[j] += m * inv_h;
    }
    RealField::from_values(grid, vals).expect("finite mollifier")
}

/// Grid density of `(1/N) Σ_i χ_η(· - x_i)`, each cell holding its average.
pub fn mollified_empirical(
    x: &ParticleConfig,
    eta: f64,
    grid: TorusGrid,
) -> Result<RealField, InitialDataError> {
    if !(eta > 0.0 && eta <= 0.25) {
        return Err(InitialDataError::InvalidParameter(format!(
            "eta = {eta} outside (0, 1/4]"
        )));
    }
    if grid.dim() != 1 {
        return Err(InitialDataError::InvalidParameter("mollification is 1-D".into()));
    }
    let mut vals = vec![0.0; grid.len()];
    let scale = 1.0 / (x.len() as f64 * grid.spacing());
    for &xi in x.positions() {
        for (j, m) in mollified_dirac_masses(grid, xi, eta) {
            vals[j] += m * scale;
        }
    }
    RealField::from_values(grid, vals).map_err(|e| InitialDataError::InvalidParameter(e.to_string()))
}
