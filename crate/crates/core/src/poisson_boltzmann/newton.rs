//! Damped Newton iteration for `-ε ΔV̂ = c - e^{Ṽ + V̂}`.
//!
//! The unknown is carried as normalized Fourier coefficients and every
//! Laplacian is applied on the Fourier side, so sample roundoff is never
//! multiplied by `|2πk|²`. Linear steps use preconditioned conjugate
//! gradients on `-εΔ + diag(e^V)` with the preconditioner `(-εΔ + 1)^{-1}`.
//!
//! Steps are globalized on the residual norm: backtracking when the full
//! step fails to decrease it, and doubling while longer steps keep
//! decreasing it. The doubling matters for small `ε`, where `e^{Ṽ}` is
//! huge at the first iterate and a unit Newton step only lowers `V` by
//! about one where the exponential dominates.

use num_complex::Complex64;

use super::PbError;
use crate::grid_spectral::{fourier_coefficients, real_from_fourier_coefficients, RealField};

pub(crate) const MAX_NEWTON_ITERATIONS: usize = 100;
pub(crate) const MAX_HALVINGS: usize = 30;
const MAX_CG_ITERATIONS: usize = 1000;
const CG_RELATIVE_TOLERANCE: f64 = 1e-13;
const MAX_DOUBLINGS: usize = 10;
/// Residual the iteration aims for; a solve that stagnates above it but
/// below the caller's tolerance is still accepted.
pub(crate) const TARGET_RESIDUAL: f64 = 1e-10;

pub(crate) struct HatSolve {
    pub coeffs: Vec<Complex64>,
    pub hat: RealField,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

struct Residual {
    coeffs: Vec<Complex64>,
    norm: f64,
    weight: RealField,
}

struct Problem<'a> {
    tilde: &'a RealField,
    background: f64,
    eps: f64,
    symbol: Vec<f64>,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

impl Problem<'_> {
    fn residual(&self, coeffs: &[Complex64]) -> Residual {
        let grid = *self.tilde.grid();
        let hat = real_from_fourier_coefficients(grid, coeffs);
        let weight = (self.tilde + &hat).exp();
        let nonlinear = fourier_coefficients(&weight.map(|w| w - self.background));
        let r: Vec<Complex64> = coeffs
            .iter()
            .zip(&self.symbol)
            .zip(&nonlinear)
            .map(|((c, s), g)| self.eps * s * c + g)
            .collect();
        let norm = dot(&r, &r).sqrt();
        Residual {
            coeffs: r,
            norm,
            weight,
        }
    }

    fn apply_jacobian(&self, weight: &RealField, x: &[Complex64]) -> Vec<Complex64> {
        let grid = *weight.grid();
        let samples = real_from_fourier_coefficients(grid, x);
        let product = fourier_coefficients(&(weight * &samples));
        x.iter()
            .zip(&self.symbol)
            .zip(product)
            .map(|((xk, s), p)| self.eps * s * xk + p)
            .collect()
    }

    fn precondition(&self, r: &[Complex64]) -> Vec<Complex64> {
        r.iter()
            .zip(&self.symbol)
            .map(|(rk, s)| rk / (self.eps * s + 1.0))
            .collect()
    }

    /// Preconditioned CG for `J δ = rhs`.
    fn linear_solve(&self, weight: &RealField, rhs: &[Complex64]) -> Vec<Complex64> {
        let mut x = vec![Complex64::new(0.0, 0.0); rhs.len()];
        let mut r = rhs.to_vec();
        let target = CG_RELATIVE_TOLERANCE * dot(rhs, rhs).sqrt();
        let mut z = self.precondition(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for _ in 0..MAX_CG_ITERATIONS {
            if dot(&r, &r).sqrt() <= target {
                break;
            }
            let ap = self.apply_jacobian(weight, &p);
            let alpha = rz / dot(&p, &ap);
            for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
                *xi += alpha * pi;
                *ri -= alpha * api;
            }
            z = self.precondition(&r);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
        x
    }
}

pub(crate) fn solve_hat(
    tilde: &RealField,
    background: f64,
    eps: f64,
    guess: Option<&[Complex64]>,
    tolerance: f64,
) -> Result<HatSolve, PbError> {
    let grid = *tilde.grid();
    let problem = Problem {
        tilde,
        background,
        eps,
        symbol: (0..grid.len()).map(|i| grid.symbol_laplacian(i)).collect(),
    };
    let mut coeffs = match guess {
        Some(g) if g.len() == grid.len() => g.to_vec(),
        _ => vec![Complex64::new(0.0, 0.0); grid.len()],
    };
    let mut current = problem.residual(&coeffs);
    let mut history = vec![current.norm];
    let mut iterations = 0;
    let target = TARGET_RESIDUAL.min(tolerance);
    while !(current.norm < target) {
        if iterations == MAX_NEWTON_ITERATIONS || !current.norm.is_finite() {
            if current.norm < tolerance {
                break;
            }
            return Err(PbError::NewtonDiverged {
                iterations,
                residual: current.norm,
            });
        }
        let rhs: Vec<Complex64> = current.coeffs.iter().map(|r| -r).collect();
        let step = problem.linear_solve(&current.weight, &rhs);
        let trial_at = |lambda: f64| -> (Vec<Complex64>, Residual) {
            let trial: Vec<Complex64> = coeffs
                .iter()
                .zip(&step)
                .map(|(c, d)| c + lambda * d)
                .collect();
            let res = problem.residual(&trial);
            (trial, res)
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let (trial, res) = trial_at(lambda);
            if res.norm <= (1.0 - 1e-4 * lambda) * current.norm {
                accepted = Some((trial, res));
                break;
            }
            lambda *= 0.5;
        }
        let Some(mut best) = accepted else {
            if current.norm < tolerance {
                break;
            }
            return Err(PbError::NewtonDiverged {
                iterations,
                residual: current.norm,
            });
        };
        if lambda == 1.0 {
            for _ in 0..MAX_DOUBLINGS {
                lambda *= 2.0;
                let (trial, res) = trial_at(lambda);
                if !(res.norm < best.1.norm) {
                    break;
                }
                best = (trial, res);
            }
        }
        coeffs = best.0;
        current = best.1;
        history.push(current.norm);
        iterations += 1;
    }
    let hat = real_from_fourier_coefficients(grid, &coeffs);
    Ok(HatSolve {
        coeffs,
        hat,
        iterations,
        residual_history: history,
    })
}
