//! Isothermal Euler equations in logarithmic variables,
//! `∂t log ρ = -div u - u·∇log ρ`, `∂t u = -u·∇u - ∇log ρ`,
//! integrated with classical RK4 and pseudospectral derivatives.

use serde::Serialize;
use thiserror::Error;

use crate::grid_spectral::{dealias, gradient, RealField, SpectralField, TorusGrid};

/// Abort threshold for `||∇u||∞`.
pub const BLOWUP_THRESHOLD: f64 = 50.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EulerError {
    #[error("||grad u||_inf = {value:.3} exceeded {BLOWUP_THRESHOLD} at t = {time}")]
    BlowupGuardTripped { time: f64, value: f64 },
    #[error("invalid Euler state: {0}")]
    InvalidState(String),
}

#[derive(Clone, Debug)]
pub struct EulerState {
    pub log_rho: RealField,
    pub u: Vec<RealField>,
    pub time: f64,
}

impl EulerState {
    pub fn new(log_rho: RealField, u: Vec<RealField>, time: f64) -> Result<Self, EulerError> {
        let grid = *log_rho.grid();
        if u.len() != grid.dim() || u.iter().any(|c| *c.grid() != grid) {
            return Err(EulerError::InvalidState(
                "velocity must have one component per axis on the density grid".into(),
            ));
        }
        Ok(Self { log_rho, u, time })
    }

    /// `ρ ≡ 1`, `u ≡ 0`.
    pub fn equilibrium(grid: TorusGrid) -> Self {
        Self {
            log_rho: RealField::zeros(grid),
            u: vec![RealField::zeros(grid); grid.dim()],
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.log_rho.grid()
    }

    pub fn rho(&self) -> RealField {
        self.log_rho.exp()
    }

    pub fn mass(&self) -> f64 {
        self.rho().integrate()
    }

    /// `max_{i,j} ||∂_j u_i||∞`.
    pub fn velocity_gradient_sup(&self) -> f64 {
        self.u
            .iter()
            .flat_map(gradient)
            .map(|d| d.sup_norm())
            .fold(0.0, f64::max)
    }

    fn axpy(&self, a: f64, k: &Rhs) -> Self {
        Self {
            log_rho: self.log_rho.zip_map(&k.log_rho, |x, y| x + a * y),
            u: self
                .u
                .iter()
                .zip(&k.u)
                .map(|(x, y)| x.zip_map(y, |p, q| p + a * q))
                .collect(),
            time: self.time,
        }
    }
}

/// Time derivatives of `(log ρ, u)`.
#[derive(Clone, Debug)]
pub struct Rhs {
    pub log_rho: RealField,
    pub u: Vec<RealField>,
}

/// `a·∇b` with 2/3-rule truncation of both factors and of the product.
fn advect(a: &[RealField], grad_b: &[RealField]) -> RealField {
    let grid = *grad_b[0].grid();
    let mut sum = RealField::zeros(grid);
    for (ai, gi) in a.iter().zip(grad_b) {
        sum = &sum + &(ai * &dealias(gi));
    }
    dealias(&sum)
}

pub fn euler_rhs(s: &EulerState) -> Rhs {
    let grid = *s.grid();
    let u: Vec<RealField> = s.u.iter().map(dealias).collect();
    let grad_l = gradient(&s.log_rho);
    let mut div_u = RealField::zeros(grid);
    for (axis, c) in s.u.iter().enumerate() {
        div_u = &div_u + &c.derivative(axis).expect("axis within grid");
    }
    let log_rho = &div_u.scaled(-1.0) - &advect(&u, &grad_l);
    let u_rhs = s
        .u
        .iter()
        .zip(&grad_l)
        .map(|(c, gl)| &advect(&u, &gradient(c)).scaled(-1.0) - gl)
        .collect();
    Rhs {
        log_rho,
        u: u_rhs,
    }
}

fn rk4_step(s: &EulerState, dt: f64) -> EulerState {
    let k1 = euler_rhs(s);
    let k2 = euler_rhs(&s.axpy(0.5 * dt, &k1));
    let k3 = euler_rhs(&s.axpy(0.5 * dt, &k2));
    let k4 = euler_rhs(&s.axpy(dt, &k3));
    let combine = |a: &RealField, b: &RealField, c: &RealField, d: &RealField, x: &RealField| {
        let mut out = x.clone();
        for (i, o) in out.values_mut().iter_mut().enumerate() {
            *o += dt / 6.0
                * (a.values()[i] + 2.0 * b.values()[i] + 2.0 * c.values()[i] + d.values()[i]);
        }
        out
    };
    EulerState {
        log_rho: combine(&k1.log_rho, &k2.log_rho, &k3.log_rho, &k4.log_rho, &s.log_rho),
        u: (0..s.u.len())
            .map(|j| combine(&k1.u[j], &k2.u[j], &k3.u[j], &k4.u[j], &s.u[j]))
            .collect(),
        time: s.time + dt,
    }
}

/// RK4 trajectory on `[s0.time, s0.time + t_end]` with equal steps of at
/// most `dt`, keeping every `sample_every`-th state plus the first and last.
pub fn run_euler(
    s0: &EulerState,
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Vec<EulerState>, EulerError> {
    if !(t_end >= 0.0 && dt > 0.0) || sample_every == 0 {
        return Err(EulerError::InvalidState(format!(
            "t_end = {t_end}, dt = {dt}, sample_every = {sample_every}"
        )));
    }
    let steps = crate::schrodinger::step_count(t_end, dt);
    let dt = if steps > 0 { t_end / steps as f64 } else { dt };
    let mut out = vec![s0.clone()];
    let mut s = s0.clone();
    for k in 1..=steps {
        s = rk4_step(&s, dt);
        if k == steps {
            s.time = s0.time + t_end;
        }
        let g = s.velocity_gradient_sup();
        if !(g <= BLOWUP_THRESHOLD) {
            return Err(EulerError::BlowupGuardTripped {
                time: s.time,
                value: g,
            });
        }
        if k % sample_every == 0 || k == steps {
            out.push(s.clone());
        }
    }
    Ok(out)
}

/// Ingredients of the stability constant along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EulerConstants {
    /// `sup_t ||∇u||∞`.
    pub sup_grad_u: f64,
    /// `sup_t ||log ρ||_{H¹} + sup_t ||∂t log ρ||_{H¹}`.
    pub log_rho_w1inf_h1: f64,
    /// `sup_t ||∇(u·∇log ρ)||₂`.
    pub sup_grad_transport: f64,
}

fn h1_norm(f: &RealField) -> f64 {
    let g: f64 = gradient(f).iter().map(|d| d.l2_norm().powi(2)).sum();
    (f.l2_norm().powi(2) + g).sqrt()
}

pub fn euler_constants(traj: &[EulerState]) -> EulerConstants {
    let mut c = EulerConstants {
        sup_grad_u: 0.0,
        log_rho_w1inf_h1: 0.0,
        sup_grad_transport: 0.0,
    };
    let (mut sup_l, mut sup_dl) = (0.0f64, 0.0f64);
    for s in traj {
        c.sup_grad_u = c.sup_grad_u.max(s.velocity_gradient_sup());
        sup_l = sup_l.max(h1_norm(&s.log_rho));
        sup_dl = sup_dl.max(h1_norm(&euler_rhs(s).log_rho));
        let grad_l = gradient(&s.log_rho);
        let mut transport = RealField::zeros(*s.grid());
        for (uj, gj) in s.u.iter().zip(&grad_l) {
            transport = &transport + &(uj * gj);
        }
        let g: f64 = gradient(&transport)
            .iter()
            .map(|d| d.l2_norm().powi(2))
            .sum();
        c.sup_grad_transport = c.sup_grad_transport.max(g.sqrt());
    }
    c.log_rho_w1inf_h1 = sup_l + sup_dl;
    c
}

#[cfg(test)]
mod tests;
