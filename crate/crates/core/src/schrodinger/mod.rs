//! Split-step spectral integration of the Schrödinger equation with a
//! self-consistent Poisson–Boltzmann (or linear Poisson) potential.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::grid_spectral::{
    complex_dirichlet_energy, complex_fourier_coefficients, complex_gradient,
    from_fourier_coefficients, ComplexField, RealField, SpectralField,
};
use crate::poisson_boltzmann::{
    solve_linear_poisson, solve_pb_with_guess, PbError, PotentialSplit,
};

/// Allowed deviation of `∫|ψ|²` from one.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Bound on the kinetic phase `ħ|2πk|²dt/2` over populated modes.
pub const MAX_KINETIC_PHASE: f64 = 50.0 * std::f64::consts::PI;
/// Fourier amplitudes below this fraction of the largest count as empty
/// when locating the highest populated wavenumber. Well-prepared data carry
/// a roundoff floor near 1e-11 at high wavenumbers from `εΔ log ρ₀`.
pub const POPULATED_MODE_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchrodingerError {
    #[error("potential solve failed: {0}")]
    PotentialSolveFailed(#[from] PbError),
    #[error("time step too large: kinetic phase {kinetic:.3}, potential phase {potential:.3}")]
    StepTooLarge { kinetic: f64, potential: f64 },
    #[error("invalid wave function: {0}")]
    InvalidWaveFunction(String),
    #[error("invalid run parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialMode {
    PoissonBoltzmann,
    LinearPoisson,
}

/// Unit-norm wave function with its scales and time.
#[derive(Clone, Debug)]
pub struct WaveFunction {
    psi: ComplexField,
    hbar: f64,
    eps: f64,
    time: f64,
}

impl WaveFunction {
    pub fn new(psi: ComplexField, hbar: f64, eps: f64, time: f64) -> Result<Self, SchrodingerError> {
        for (name, v) in [("hbar", hbar), ("eps", eps)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SchrodingerError::InvalidWaveFunction(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let mass = psi.norm_sqr().integrate();
        if (mass - 1.0).abs() > NORM_TOLERANCE {
            return Err(SchrodingerError::InvalidWaveFunction(format!("mass {mass}")));
        }
        Ok(Self {
            psi,
            hbar,
            eps,
            time,
        })
    }

    pub fn psi(&self) -> &ComplexField {
        &self.psi
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn mass(&self) -> f64 {
        self.psi.norm_sqr().integrate()
    }

    /// Multiplies `ψ` by a global phase `e^{iθ}`.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let z = Complex64::from_polar(1.0, theta);
        Self {
            psi: self.psi.map(|p| p * z),
            ..self.clone()
        }
    }
}

/// `ρ = |ψ|²`.
pub fn density(w: &WaveFunction) -> RealField {
    w.psi.norm_sqr()
}

/// `J = ħ Im(ψ̄ ∇ψ)`, one field per axis.
pub fn current(w: &WaveFunction) -> Vec<RealField> {
    complex_gradient(&w.psi)
        .iter()
        .map(|d| {
            let vals = w
                .psi
                .values()
                .iter()
                .zip(d.values())
                .map(|(p, dp)| w.hbar * (p.conj() * dp).im)
                .collect();
            RealField::from_values(*w.psi.grid(), vals).expect("finite current")
        })
        .collect()
}

/// Solves for the potential generated by `ρ` in the given mode.
pub fn solve_potential(
    rho: &RealField,
    eps: f64,
    mode: PotentialMode,
    guess: Option<&PotentialSplit>,
) -> Result<PotentialSplit, PbError> {
    match mode {
        PotentialMode::PoissonBoltzmann => solve_pb_with_guess(rho, eps, guess),
        PotentialMode::LinearPoisson => solve_linear_poisson(rho, eps),
    }
}

/// Parts of the conserved energy
/// `F = (ħ²/2)∫|∇ψ|² + (ε/2)∫|∇V|² + ∫V e^V`.
///
/// Under the linear Poisson coupling the Boltzmann term is absent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TotalEnergy {
    pub kinetic: f64,
    pub field: f64,
    pub boltzmann: f64,
    pub total: f64,
}

pub fn total_energy(w: &WaveFunction, split: &PotentialSplit) -> TotalEnergy {
    let kinetic = 0.5 * w.hbar * w.hbar * complex_dirichlet_energy(&w.psi);
    let field = split.field_energy();
    let boltzmann = if split.is_linear() {
        0.0
    } else {
        let v = split.potential();
        (&v * &v.exp()).integrate()
    };
    TotalEnergy {
        kinetic,
        field,
        boltzmann,
        total: kinetic + field + boltzmann,
    }
}

fn kinetic_half_step(psi: &ComplexField, hbar: f64, dt: f64) -> (ComplexField, f64) {
    let grid = *psi.grid();
    let mut coeffs = complex_fourier_coefficients(psi);
    let peak = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let mut populated = 0.0f64;
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let lam = grid.symbol_laplacian(idx);
        if c.norm() > POPULATED_MODE_THRESHOLD * peak {
            populated = populated.max(lam);
        }
        *c *= Complex64::from_polar(1.0, -hbar * lam * dt / 4.0);
    }
    (
        from_fourier_coefficients(grid, &coeffs),
        hbar * populated * dt / 2.0,
    )
}

/// Strang step with a persistent Newton warm start.
#[derive(Clone, Debug)]
pub struct StrangStepper {
    mode: PotentialMode,
    last: Option<PotentialSplit>,
}

impl StrangStepper {
    pub fn new(mode: PotentialMode) -> Self {
        Self { mode, last: None }
    }

    pub fn mode(&self) -> PotentialMode {
        self.mode
    }

    /// The potential used by the most recent step.
    pub fn last_potential(&self) -> Option<&PotentialSplit> {
        self.last.as_ref()
    }

    /// Advances `w` by `dt`: half kinetic step, potential phase with `V`
    /// solved from the intermediate density, half kinetic step.
    pub fn step(&mut self, w: &WaveFunction, dt: f64) -> Result<WaveFunction, SchrodingerError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SchrodingerError::InvalidParameter(format!("dt = {dt}")));
        }
        let (half, kinetic_phase) = kinetic_half_step(&w.psi, w.hbar, dt);
        if kinetic_phase >= MAX_KINETIC_PHASE {
            return Err(SchrodingerError::StepTooLarge {
                kinetic: kinetic_phase,
                potential: f64::NAN,
            });
        }
        let split = solve_potential(&half.norm_sqr(), w.eps, self.mode, self.last.as_ref())?;
        let v = split.potential();
        let potential_phase = v.sup_norm() * dt / w.hbar;
        if potential_phase >= std::f64::consts::PI {
            return Err(SchrodingerError::StepTooLarge {
                kinetic: kinetic_phase,
                potential: potential_phase,
            });
        }
        let scale = dt / w.hbar;
        let vals = half
            .values()
            .iter()
            .zip(v.values())
            .map(|(p, vi)| p * Complex64::from_polar(1.0, -vi * scale))
            .collect();
        let kicked = ComplexField::from_values(*half.grid(), vals)
            .map_err(|e| SchrodingerError::InvalidWaveFunction(e.to_string()))?;
        let (psi, _) = kinetic_half_step(&kicked, w.hbar, dt);
        self.last = Some(split);
        Ok(WaveFunction {
            psi,
            time: w.time + dt,
            ..w.clone()
        })
    }
}

/// One Strang step from a cold Newton start.
pub fn step_strang(
    w: &WaveFunction,
    dt: f64,
    mode: PotentialMode,
) -> Result<WaveFunction, SchrodingerError> {
    StrangStepper::new(mode).step(w, dt)
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub time: f64,
    pub wave: WaveFunction,
    /// Potential solved from `|ψ(time)|²`.
    pub potential: PotentialSplit,
}

#[derive(Clone, Debug)]
pub struct SchrodingerTrajectory {
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<TotalEnergy>,
}

impl SchrodingerTrajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory holds the initial state")
    }
}

/// Number of equal steps covering `[0, t_end]` with step at most `dt`
/// (up to a relative rounding allowance).
pub fn step_count(t_end: f64, dt: f64) -> usize {
    if t_end <= 0.0 {
        return 0;
    }
    (t_end / dt - 1e-9).ceil().max(1.0) as usize
}

/// Integrates to `t_end`, recording a snapshot every `sample_every` steps
/// and at the final time. Each snapshot carries a potential re-solved from
/// its own density so that diagnostics are self-consistent.
pub fn run(
    w0: &WaveFunction,
    t_end: f64,
    dt: f64,
    sample_every: usize,
    mode: PotentialMode,
) -> Result<SchrodingerTrajectory, SchrodingerError> {
    if !(t_end >= 0.0) || sample_every == 0 || !(dt > 0.0) {
        return Err(SchrodingerError::InvalidParameter(format!(
            "t_end = {t_end}, dt = {dt}, sample_every = {sample_every}"
        )));
    }
    let steps = step_count(t_end, dt);
    let dt = if steps > 0 { t_end / steps as f64 } else { dt };
    let mut snapshots = Vec::new();
    let mut diagnostics = Vec::new();
    let mut record = |w: &WaveFunction, guess: Option<&PotentialSplit>| -> Result<(), SchrodingerError> {
        let potential = solve_potential(&density(w), w.eps, mode, guess)?;
        diagnostics.push(total_energy(w, &potential));
        snapshots.push(Snapshot {
            time: w.time,
            wave: w.clone(),
            potential,
        });
        Ok(())
    };
    record(w0, None)?;
    let mut stepper = StrangStepper::new(mode);
    let mut w = w0.clone();
    for k in 1..=steps {
        w = stepper.step(&w, dt)?;
        if k == steps {
            w.time = w0.time + t_end;
        }
        if k % sample_every == 0 || k == steps {
            record(&w, stepper.last_potential())?;
        }
    }
    Ok(SchrodingerTrajectory {
        snapshots,
        diagnostics,
    })
}
