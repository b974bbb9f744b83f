//! Nonlinear Poisson–Boltzmann solves `-ε ΔV = h - e^V` on the torus.
//!
//! The potential is split as `V = Ṽ + V̂`: `Ṽ` is the mean-zero linear
//! response `-ε ΔṼ = h - 1`, and `V̂` carries the exponential nonlinearity
//! `-ε ΔV̂ = 1 - e^{Ṽ + V̂}`. For smooth densities `Ṽ` comes from one
//! spectral division; for 1-D empirical measures it is summed exactly from
//! the periodic Green function, so Dirac masses are never gridded.

mod kernel;
mod newton;
mod validators;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::grid_spectral::{
    dirichlet_energy_from_coefficients, fourier_coefficients, real_from_fourier_coefficients,
    GridError, RealField, SpectralField, TorusGrid,
};

pub use kernel::GreenKernel1D;
pub use validators::{
    lipschitz_in_configuration, mollified_potential_gap, validate_elliptic_bounds,
    w1_stability_check, EllipticBoundsReport, LipschitzReport, W1StabilityReport, LIP_SLACK,
};

/// Allowed deviation of `∫h` from one.
pub const MASS_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PbError {
    #[error("Newton iteration failed after {iterations} steps (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("right-hand side is not a probability density: {0}")]
    NotAProbabilityDensity(String),
    #[error("eps must be positive and finite, got {0}")]
    InvalidEps(f64),
    #[error("empirical solves are one-dimensional")]
    NotOneDimensional,
    #[error("invalid particle configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// `N ≥ 1` particle positions on the unit circle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParticleConfig {
    positions: Vec<f64>,
}

impl ParticleConfig {
    /// Rejects empty configurations and positions outside `[0, 1)`.
    pub fn new(positions: Vec<f64>) -> Result<Self, PbError> {
        if positions.is_empty() {
            return Err(PbError::InvalidConfig("no particles".into()));
        }
        if let Some(x) = positions.iter().find(|x| !(0.0..1.0).contains(*x)) {
            return Err(PbError::InvalidConfig(format!("position {x} outside [0, 1)")));
        }
        Ok(Self { positions })
    }

    /// Wraps arbitrary finite positions onto `[0, 1)`.
    pub fn wrapped(positions: impl IntoIterator<Item = f64>) -> Result<Self, PbError> {
        let wrapped = positions
            .into_iter()
            .map(|x| {
                let y = x.rem_euclid(1.0);
                if y >= 1.0 {
                    0.0
                } else {
                    y
                }
            })
            .collect();
        Self::new(wrapped)
    }

    /// `N` equispaced particles starting at `offset`.
    pub fn equispaced(n: usize, offset: f64) -> Result<Self, PbError> {
        Self::wrapped((0..n).map(|i| offset + i as f64 / n as f64))
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// A probability measure on the torus: grid density or empirical measure.
#[derive(Clone, Copy, Debug)]
pub enum MeasureRef<'a> {
    Density(&'a RealField),
    Empirical(&'a ParticleConfig),
}

/// Newton bookkeeping for one solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveStats {
    pub newton_iterations: usize,
    pub residual_history: Vec<f64>,
    pub tolerance: f64,
}

impl SolveStats {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&0.0)
    }
}

/// `V = Ṽ + V̂` together with the scale `ε`.
#[derive(Clone, Debug)]
pub struct PotentialSplit {
    tilde: RealField,
    hat: RealField,
    eps: f64,
    background: f64,
    tilde_coeffs: Option<Vec<Complex64>>,
    hat_coeffs: Vec<Complex64>,
    stats: SolveStats,
    linear: bool,
}

impl PotentialSplit {
    pub fn tilde(&self) -> &RealField {
        &self.tilde
    }

    pub fn hat(&self) -> &RealField {
        &self.hat
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn stats(&self) -> &SolveStats {
        &self.stats
    }

    pub fn grid(&self) -> &TorusGrid {
        self.tilde.grid()
    }

    /// True for potentials from [`solve_linear_poisson`].
    pub fn is_linear(&self) -> bool {
        self.linear
    }

    pub fn potential(&self) -> RealField {
        &self.tilde + &self.hat
    }

    /// `m = e^V`.
    pub fn boltzmann_density(&self) -> RealField {
        self.potential().exp()
    }

    /// Normalized Fourier coefficients of `V̂`.
    pub fn hat_coefficients(&self) -> &[Complex64] {
        &self.hat_coeffs
    }

    fn potential_coefficients(&self) -> Vec<Complex64> {
        match &self.tilde_coeffs {
            Some(t) => t.iter().zip(&self.hat_coeffs).map(|(a, b)| a + b).collect(),
            None => fourier_coefficients(&self.potential()),
        }
    }

    /// `∫|∇V|²`. Exact on the Fourier side for smooth solves; for empirical
    /// solves the kinked `Ṽ` samples are differentiated spectrally.
    pub fn dirichlet_energy(&self) -> f64 {
        dirichlet_energy_from_coefficients(self.grid(), &self.potential_coefficients())
    }

    /// `(ε/2)∫|∇V|²`.
    pub fn field_energy(&self) -> f64 {
        0.5 * self.eps * self.dirichlet_energy()
    }

    /// `||-ε ΔV̂ - c + e^V||₂`, with `c` the background (`∫h`).
    pub fn hat_residual_norm(&self) -> f64 {
        let grid = *self.grid();
        let g = fourier_coefficients(&self.boltzmann_density().map(|w| w - self.background));
        self.hat_coeffs
            .iter()
            .zip(&g)
            .enumerate()
            .map(|(i, (c, gk))| (self.eps * grid.symbol_laplacian(i) * c + gk).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `||-ε ΔV - h + e^V||₂` for a smooth right-hand side.
    pub fn residual_norm(&self, h: &RealField) -> f64 {
        let grid = *self.grid();
        let v = self.potential_coefficients();
        let source = fourier_coefficients(h);
        let m = fourier_coefficients(&self.boltzmann_density());
        (0..grid.len())
            .map(|i| (self.eps * grid.symbol_laplacian(i) * v[i] - source[i] + m[i]).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn check_eps(eps: f64) -> Result<(), PbError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(PbError::InvalidEps(eps));
    }
    Ok(())
}

fn check_density(h: &RealField) -> Result<f64, PbError> {
    if h.min() < 0.0 {
        return Err(PbError::NotAProbabilityDensity(format!(
            "negative sample {:e}",
            h.min()
        )));
    }
    let mass = h.integrate();
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(PbError::NotAProbabilityDensity(format!("mass {mass}")));
    }
    Ok(mass)
}

/// `newton_tolerance = 1e-10 (1 + ||h||₂)`.
pub fn newton_tolerance(h: &RealField) -> f64 {
    1e-10 * (1.0 + h.l2_norm())
}

/// Newton tolerance for empirical right-hand sides, where the uniform
/// background (`||1||₂ = 1`) stands in for `||h||₂`.
pub const EMPIRICAL_NEWTON_TOLERANCE: f64 = 2e-10;

/// Solves `-ε ΔV = h - e^V` for a smooth probability density `h`.
pub fn solve_pb(h: &RealField, eps: f64) -> Result<PotentialSplit, PbError> {
    solve_pb_with_guess(h, eps, None)
}

/// As [`solve_pb`], starting Newton from the `V̂` of `guess` instead of zero.
pub fn solve_pb_with_guess(
    h: &RealField,
    eps: f64,
    guess: Option<&PotentialSplit>,
) -> Result<PotentialSplit, PbError> {
    check_eps(eps)?;
    let mass = check_density(h)?;
    let grid = *h.grid();
    let source = fourier_coefficients(h);
    let tilde_coeffs: Vec<Complex64> = source
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if i == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                s / (eps * grid.symbol_laplacian(i))
            }
        })
        .collect();
    let tilde = real_from_fourier_coefficients(grid, &tilde_coeffs);
    let tolerance = newton_tolerance(h);
    let guess = guess
        .filter(|g| g.grid() == &grid)
        .map(|g| g.hat_coefficients());
    let solved = newton::solve_hat(&tilde, mass, eps, guess, tolerance)?;
    Ok(PotentialSplit {
        tilde,
        hat: solved.hat,
        eps,
        background: mass,
        tilde_coeffs: Some(tilde_coeffs),
        hat_coeffs: solved.coeffs,
        stats: SolveStats {
            newton_iterations: solved.iterations,
            residual_history: solved.residual_history,
            tolerance,
        },
        linear: false,
    })
}

/// Linear Poisson potential `-ε ΔV = h - 1` (no Boltzmann response),
/// returned with `V̂ = 0`.
pub fn solve_linear_poisson(h: &RealField, eps: f64) -> Result<PotentialSplit, PbError> {
    check_eps(eps)?;
    let mass = check_density(h)?;
    let grid = *h.grid();
    let source = fourier_coefficients(h);
    let tilde_coeffs: Vec<Complex64> = source
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if i == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                s / (eps * grid.symbol_laplacian(i))
            }
        })
        .collect();
    Ok(PotentialSplit {
        tilde: real_from_fourier_coefficients(grid, &tilde_coeffs),
        hat: RealField::zeros(grid),
        eps,
        background: mass,
        tilde_coeffs: Some(tilde_coeffs),
        hat_coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        stats: SolveStats {
            newton_iterations: 0,
            residual_history: Vec::new(),
            tolerance: 0.0,
        },
        linear: true,
    })
}

/// Exact samples of `Ṽ = (1/ε)[(1/N) Σ_i K(y - x_i) + 1/12]` at the nodes.
pub fn empirical_tilde(x: &ParticleConfig, eps: f64, grid: TorusGrid) -> RealField {
    let inv_n = 1.0 / x.len() as f64;
    RealField::from_fn(grid, |p| {
        let sum: f64 = x
            .positions()
            .iter()
            .map(|&xi| GreenKernel1D::value(p[0] - xi))
            .sum();
        (sum * inv_n - GreenKernel1D::INTEGRAL) / eps
    })
}

/// Solves `-ε V'' = μ_{X_N} - e^V` on a 1-D grid.
pub fn solve_pb_empirical(
    x: &ParticleConfig,
    eps: f64,
    grid: TorusGrid,
) -> Result<PotentialSplit, PbError> {
    check_eps(eps)?;
    if grid.dim() != 1 {
        return Err(PbError::NotOneDimensional);
    }
    let tilde = empirical_tilde(x, eps, grid);
    let solved = newton::solve_hat(&tilde, 1.0, eps, None, EMPIRICAL_NEWTON_TOLERANCE)?;
    Ok(PotentialSplit {
        tilde,
        hat: solved.hat,
        eps,
        background: 1.0,
        tilde_coeffs: None,
        hat_coeffs: solved.coeffs,
        stats: SolveStats {
            newton_iterations: solved.iterations,
            residual_history: solved.residual_history,
            tolerance: EMPIRICAL_NEWTON_TOLERANCE,
        },
        linear: false,
    })
}
