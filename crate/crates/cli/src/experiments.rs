//! One function per experiment kind. Each returns the files to write; the
//! caller writes them after every sweep point has finished.

use std::collections::BTreeMap;

use qnlab_core::euler_isothermal::{euler_constants, run_euler, EulerConstants, EulerState};
use qnlab_core::grid_spectral::gradient;
use qnlab_core::initial_data::{sample_iid, well_prepared, WellPreparedSpec};
use qnlab_core::modulated_energy::{default_test_fields, modulated_total, weak_distances};
use qnlab_core::nbody_empirical::{large_deviation_stats, LargeDeviationRow};
use qnlab_core::poisson_boltzmann::{
    solve_pb, solve_pb_empirical, validate_elliptic_bounds, MeasureRef, PotentialSplit,
    MASS_TOLERANCE,
};
use qnlab_core::schrodinger::{density, run, SchrodingerTrajectory};
use qnlab_core::{RealField, SpectralField, TorusGrid};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Kind};
use crate::error::CliError;
use crate::report::{Artifacts, Summary, SweepRow, Table, ValidatorResult, SWEEP_HEADER};

/// Relative energy drift tolerated by the conservation validators.
pub const ENERGY_DRIFT_TOLERANCE: f64 = 1e-6;
/// Slack on the weak current bound.
pub const CURRENT_BOUND_SLACK: f64 = 1e-10;
/// Agreement between the assembled and closed-form initial energies.
pub const INITIAL_ENERGY_TOLERANCE: f64 = 1e-8;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    match cfg.kind {
        Kind::PbSolve => pb_solve(cfg),
        Kind::SchrodingerRun => schrodinger_run(cfg),
        Kind::EulerRun => euler_run(cfg),
        Kind::QuasineutralSweep => quasineutral_sweep(cfg),
        Kind::NbodyStats => nbody_stats(cfg),
    }
}

fn summary(cfg: &ExperimentConfig, points: Vec<serde_json::Value>) -> Summary {
    Summary {
        kind: cfg.kind,
        seed: cfg.seed,
        config: cfg.raw.clone(),
        points,
        scalars: BTreeMap::new(),
        validators: Vec::new(),
    }
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn coordinate_header(grid: &TorusGrid) -> Vec<&'static str> {
    ["x", "y"][..grid.dim()].to_vec()
}

/// One row per node: coordinates followed by the given fields.
fn node_table(grid: &TorusGrid, names: &[&str], fields: &[&RealField]) -> Table {
    let mut header = coordinate_header(grid);
    header.extend_from_slice(names);
    let mut t = Table::new(&header);
    for idx in 0..grid.len() {
        let p = grid.node(idx);
        let mut row: Vec<f64> = p[..grid.dim()].to_vec();
        row.extend(fields.iter().map(|f| f.values()[idx]));
        t.push(row);
    }
    t
}

fn peak_relative_drift(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let first = values.clone().next().unwrap_or(0.0);
    values
        .map(|v| (v - first).abs() / (1.0 + first.abs()))
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
struct PbPoint {
    eps: f64,
    source: &'static str,
    particles: usize,
    newton_iterations: usize,
    final_residual: f64,
    tolerance: f64,
    sup_potential: f64,
    mass_error: f64,
    hat_derivative_lipschitz: Option<f64>,
    eps_sup_potential: Option<f64>,
    bounds_hold: bool,
}

fn pb_solve(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let (rho0, _) = cfg.initial_fields()?;
    let particles = if cfg.pb_particles > 0 {
        Some(sample_iid(&rho0, cfg.pb_particles, cfg.seed)?)
    } else {
        None
    };
    let solves: Vec<(f64, PotentialSplit)> = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            let split = match &particles {
                Some(x) => solve_pb_empirical(x, eps, cfg.grid)?,
                None => solve_pb(&rho0, eps)?,
            };
            Ok((eps, split))
        })
        .collect::<Result<_, CliError>>()?;

    let mut out = Artifacts::default();
    let mut table = Table::new(&[
        "eps",
        "newton_iterations",
        "final_residual",
        "sup_potential",
        "mass_error",
    ])
    .with_integer_columns(&["newton_iterations"]);
    let mut points = Vec::new();
    let mut converged = true;
    let mut mass_ok = true;
    let mut bounds_ok = true;
    for (i, (eps, split)) in solves.iter().enumerate() {
        let source = match &particles {
            Some(x) => MeasureRef::Empirical(x),
            None => MeasureRef::Density(&rho0),
        };
        let bounds = validate_elliptic_bounds(split, source);
        let stats = split.stats();
        let v = split.potential();
        let mass_error = split.boltzmann_density().integrate() - 1.0;
        converged &= stats.final_residual() <= stats.tolerance;
        mass_ok &= mass_error.abs() <= MASS_TOLERANCE;
        bounds_ok &= bounds.all_hold();
        table.push(vec![
            *eps,
            stats.newton_iterations as f64,
            stats.final_residual(),
            v.sup_norm(),
            mass_error,
        ]);
        points.push(to_value(&PbPoint {
            eps: *eps,
            source: if particles.is_some() { "empirical" } else { "density" },
            particles: cfg.pb_particles,
            newton_iterations: stats.newton_iterations,
            final_residual: stats.final_residual(),
            tolerance: stats.tolerance,
            sup_potential: v.sup_norm(),
            mass_error,
            hat_derivative_lipschitz: bounds.hat_derivative_lipschitz,
            eps_sup_potential: bounds.eps_sup_potential,
            bounds_hold: bounds.all_hold(),
        }));
        let bz = split.boltzmann_density();
        out.add_table(
            format!("plotdata/potential_{i}.csv"),
            &node_table(&cfg.grid, &["tilde", "hat", "potential", "boltzmann"], &[split.tilde(), split.hat(), &v, &bz]),
        );
    }
    let mut s = summary(cfg, points);
    s.validators = vec![
        ValidatorResult::new("newton_converged", converged, "final residual within tolerance".into()),
        ValidatorResult::new("mass_preserved", mass_ok, format!("|∫e^V - 1| <= {MASS_TOLERANCE:e}")),
        ValidatorResult::new("elliptic_bounds", bounds_ok, "all applicable bounds hold".into()),
    ];
    out.add_table("pb.csv", &table);
    out.add_summary(&s);
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
struct SchrodingerPoint {
    eps: f64,
    hbar: f64,
    samples: usize,
    initial_total_energy: f64,
    peak_energy_drift: f64,
    peak_mass_drift: f64,
    max_newton_iterations: usize,
}

fn well_prepared_trajectory(
    cfg: &ExperimentConfig,
    rho0: &RealField,
    u0: &RealField,
    eps: f64,
    hbar: f64,
) -> Result<(WellPreparedSpec, SchrodingerTrajectory), CliError> {
    let spec = WellPreparedSpec {
        rho0: rho0.clone(),
        u0: u0.clone(),
        eps,
        hbar,
    };
    let w0 = well_prepared(&spec)?;
    let traj = run(&w0, cfg.t_end, cfg.dt, cfg.sample_every, cfg.mode)?;
    Ok((spec, traj))
}

fn schrodinger_run(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let (rho0, u0) = cfg.initial_fields()?;
    cfg.check_resolution(&u0)?;
    let points = cfg.points();
    let runs: Vec<SchrodingerTrajectory> = points
        .par_iter()
        .map(|&(eps, hbar)| Ok(well_prepared_trajectory(cfg, &rho0, &u0, eps, hbar)?.1))
        .collect::<Result<_, CliError>>()?;

    let mut out = Artifacts::default();
    let mut table = Table::new(&["eps", "hbar", "time", "mass", "kinetic", "field", "boltzmann", "total"]);
    let mut summaries = Vec::new();
    let (mut unitary, mut conserved) = (true, true);
    for (i, ((eps, hbar), traj)) in points.iter().zip(&runs).enumerate() {
        for (snap, e) in traj.snapshots.iter().zip(&traj.diagnostics) {
            table.push(vec![*eps, *hbar, snap.time, snap.wave.mass(), e.kinetic, e.field, e.boltzmann, e.total]);
        }
        let point = SchrodingerPoint {
            eps: *eps,
            hbar: *hbar,
            samples: traj.snapshots.len(),
            initial_total_energy: traj.diagnostics[0].total,
            peak_energy_drift: peak_relative_drift(traj.diagnostics.iter().map(|e| e.total)),
            peak_mass_drift: traj
                .snapshots
                .iter()
                .map(|s| (s.wave.mass() - 1.0).abs())
                .fold(0.0, f64::max),
            max_newton_iterations: traj
                .snapshots
                .iter()
                .map(|s| s.potential.stats().newton_iterations)
                .max()
                .unwrap_or(0),
        };
        unitary &= point.peak_mass_drift <= 1e-10;
        conserved &= point.peak_energy_drift <= ENERGY_DRIFT_TOLERANCE;
        summaries.push(to_value(&point));
        let last = traj.last();
        out.add_table(
            format!("plotdata/point{i}_final_density.csv"),
            &node_table(&cfg.grid, &["rho", "potential"], &[&density(&last.wave), &last.potential.potential()]),
        );
    }
    let mut s = summary(cfg, summaries);
    s.validators = vec![
        ValidatorResult::new("unitarity", unitary, "|∫|ψ|² - 1| <= 1e-10 at every sample".into()),
        ValidatorResult::new(
            "energy_conservation",
            conserved,
            format!("|F(t) - F(0)|/(1 + |F(0)|) <= {ENERGY_DRIFT_TOLERANCE:e}"),
        ),
    ];
    out.add_table("schrodinger.csv", &table);
    out.add_summary(&s);
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
struct EulerPoint {
    samples: usize,
    final_time: f64,
    peak_mass_drift: f64,
    constants: EulerConstants,
}

fn euler_initial(rho0: &RealField, u0: &RealField) -> Result<EulerState, CliError> {
    Ok(EulerState::new(rho0.map(f64::ln), gradient(u0), 0.0)?)
}

fn euler_run(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let (rho0, u0) = cfg.initial_fields()?;
    let traj = run_euler(&euler_initial(&rho0, &u0)?, cfg.t_end, cfg.dt, cfg.sample_every)?;
    let mut table = Table::new(&["time", "mass", "sup_grad_u"]);
    for s in &traj {
        table.push(vec![s.time, s.mass(), s.velocity_gradient_sup()]);
    }
    let last = traj.last().expect("trajectory holds the initial state");
    let point = EulerPoint {
        samples: traj.len(),
        final_time: last.time,
        peak_mass_drift: traj.iter().map(|s| (s.mass() - 1.0).abs()).fold(0.0, f64::max),
        constants: euler_constants(&traj),
    };
    let mut out = Artifacts::default();
    let mut fields = vec![last.rho()];
    fields.extend(last.u.iter().cloned());
    let names: Vec<&str> = ["rho", "u_x", "u_y"][..=cfg.grid.dim()].to_vec();
    out.add_table(
        "plotdata/euler_final.csv",
        &node_table(&cfg.grid, &names, &fields.iter().collect::<Vec<_>>()),
    );
    let mut s = summary(cfg, vec![to_value(&point)]);
    s.validators = vec![ValidatorResult::new(
        "mass_conservation",
        point.peak_mass_drift <= MASS_TOLERANCE,
        format!("|∫ρ - 1| <= {MASS_TOLERANCE:e}"),
    )];
    out.add_table("euler.csv", &table);
    out.add_summary(&s);
    Ok(out)
}

/// Per-point maxima of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub eps: f64,
    pub hbar: f64,
    pub samples: usize,
    pub initial_total_modulated: f64,
    pub initial_closed_form: f64,
    pub max_total_modulated: f64,
    pub max_kinetic_modulated: f64,
    pub max_field_energy: f64,
    pub max_relative_entropy: f64,
    pub max_h_minus1_density_error: f64,
    pub max_l1_entropy_error: f64,
    pub max_current_weak_error: f64,
    pub current_bound_holds: bool,
    pub peak_energy_drift: f64,
    pub euler_constants: EulerConstants,
}

/// Rows and maxima for one `(ε, ħ)`.
#[derive(Clone, Debug)]
pub struct SweepPointResult {
    pub point: SweepPoint,
    pub rows: Vec<SweepRow>,
}

/// Evolves well-prepared data and the Euler reference on the same grid and
/// time samples, and evaluates the modulated energy at each sample.
pub fn sweep_point(cfg: &ExperimentConfig, rho0: &RealField, u0: &RealField, eps: f64, hbar: f64) -> Result<SweepPointResult, CliError> {
    let (spec, traj) = well_prepared_trajectory(cfg, rho0, u0, eps, hbar)?;
    let euler = run_euler(&euler_initial(rho0, u0)?, cfg.t_end, cfg.dt, cfg.sample_every)?;
    if euler.len() != traj.snapshots.len() {
        return Err(CliError::Solver("Euler and Schrödinger samples are misaligned".into()));
    }
    let fields = default_test_fields(cfg.grid);
    let mut rows = Vec::with_capacity(euler.len());
    let mut bound_holds = true;
    for (snap, e) in traj.snapshots.iter().zip(&euler) {
        if (snap.time - e.time).abs() > 0.5 * cfg.dt {
            return Err(CliError::Solver(format!("sample times {} and {} differ", snap.time, e.time)));
        }
        let r = modulated_total(&snap.wave, &snap.potential, e)?;
        let d = weak_distances(&snap.wave, &snap.potential, e, &fields)?;
        bound_holds &= d
            .current_errors
            .iter()
            .zip(&d.current_bounds)
            .all(|(err, b)| *err <= b + CURRENT_BOUND_SLACK);
        rows.push(SweepRow {
            eps,
            hbar,
            time: snap.time,
            kinetic_modulated: r.kinetic_modulated,
            field_energy: r.field_energy,
            relative_entropy: r.relative_entropy,
            total_modulated: r.total_modulated,
            conserved_total: r.conserved_total,
            h_minus1_density_error: d.h_minus1_density_error,
            l1_entropy_error: d.l1_entropy_error,
            current_weak_error: d.max_current_error(),
        });
    }
    let max = |f: fn(&SweepRow) -> f64| rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let point = SweepPoint {
        eps,
        hbar,
        samples: rows.len(),
        initial_total_modulated: rows[0].total_modulated,
        initial_closed_form: spec.closed_form_energy()?,
        max_total_modulated: max(|r| r.total_modulated),
        max_kinetic_modulated: max(|r| r.kinetic_modulated),
        max_field_energy: max(|r| r.field_energy),
        max_relative_entropy: max(|r| r.relative_entropy),
        max_h_minus1_density_error: max(|r| r.h_minus1_density_error),
        max_l1_entropy_error: max(|r| r.l1_entropy_error),
        max_current_weak_error: max(|r| r.current_weak_error),
        current_bound_holds: bound_holds,
        peak_energy_drift: peak_relative_drift(rows.iter().map(|r| r.conserved_total)),
        euler_constants: euler_constants(&euler),
    };
    Ok(SweepPointResult { point, rows })
}

/// Whether `sup_t 𝓔` strictly decreases as `ε + ħ` decreases.
pub fn strictly_decreasing_in_scale(points: &[SweepPoint]) -> bool {
    let mut sorted: Vec<&SweepPoint> = points.iter().collect();
    sorted.sort_by(|a, b| (b.eps + b.hbar).total_cmp(&(a.eps + a.hbar)));
    sorted
        .windows(2)
        .all(|w| w[1].max_total_modulated < w[0].max_total_modulated)
}

fn quasineutral_sweep(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let (rho0, u0) = cfg.initial_fields()?;
    cfg.check_resolution(&u0)?;
    let results: Vec<SweepPointResult> = cfg
        .points()
        .par_iter()
        .map(|&(eps, hbar)| sweep_point(cfg, &rho0, &u0, eps, hbar))
        .collect::<Result<_, CliError>>()?;

    let mut out = Artifacts::default();
    let mut sweep = Table::new(&SWEEP_HEADER);
    for (i, r) in results.iter().enumerate() {
        let mut trace = Table::new(&SWEEP_HEADER[2..]);
        for row in &r.rows {
            sweep.push(row.values().to_vec());
            trace.push(row.values()[2..].to_vec());
        }
        out.add_table(format!("plotdata/point{i}_energy.csv"), &trace);
    }
    let points: Vec<SweepPoint> = results.into_iter().map(|r| r.point).collect();
    let nonneg = points.iter().all(|p| {
        p.max_total_modulated.is_finite()
            && p.initial_total_modulated >= -1e-12
    });
    let closed_form = points
        .iter()
        .map(|p| (p.initial_total_modulated - p.initial_closed_form).abs())
        .fold(0.0, f64::max);
    let drift = points.iter().map(|p| p.peak_energy_drift).fold(0.0, f64::max);
    let mut s = summary(cfg, points.iter().map(to_value).collect());
    s.scalars.insert("max_initial_energy_error".into(), closed_form);
    s.scalars.insert("max_peak_energy_drift".into(), drift);
    s.validators = vec![
        ValidatorResult::new("total_modulated_nonnegative", nonneg, "𝓔(t) >= -1e-12".into()),
        ValidatorResult::new(
            "initial_energy_closed_form",
            closed_form <= INITIAL_ENERGY_TOLERANCE,
            format!("max |𝓔(0) - closed form| = {closed_form:e}"),
        ),
        ValidatorResult::new(
            "energy_conservation",
            drift <= ENERGY_DRIFT_TOLERANCE,
            format!("max relative drift of F = {drift:e}"),
        ),
        ValidatorResult::new(
            "weak_current_bound",
            points.iter().all(|p| p.current_bound_holds),
            "|∫(J - ρu)·b| <= 2||b||∞ √K".into(),
        ),
        ValidatorResult::new(
            "sup_modulated_energy_decreasing",
            strictly_decreasing_in_scale(&points),
            "sup_t 𝓔 strictly decreases with ε + ħ".into(),
        ),
    ];
    out.add_table("sweep.csv", &sweep);
    out.add_summary(&s);
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
struct NbodyPoint {
    #[serde(flatten)]
    row: LargeDeviationRow,
    expected_mean_energy: f64,
}

fn nbody_stats(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let report = large_deviation_stats(&cfg.nbody_ns, cfg.nbody_samples, cfg.seed)?;
    let mut table = Table::new(&["n", "samples", "mean_energy", "stderr_energy", "mean_w1_sq", "expected_mean_energy"])
        .with_integer_columns(&["n", "samples"]);
    let mut within = true;
    let mut points = Vec::new();
    for row in &report.rows {
        // E[𝓔(X_N, 1)] = -(1/N)∫K with ∫K = -1/12.
        let expected = 1.0 / (12.0 * row.n as f64);
        within &= (row.mean_energy - expected).abs() <= 3.0 * row.stderr_energy;
        table.push(vec![
            row.n as f64,
            row.samples as f64,
            row.mean_energy,
            row.stderr_energy,
            row.mean_w1_sq,
            expected,
        ]);
        points.push(to_value(&NbodyPoint {
            row: row.clone(),
            expected_mean_energy: expected,
        }));
    }
    let mut s = summary(cfg, points);
    s.scalars.insert("w1_sq_exponent".into(), report.w1_sq_exponent);
    s.validators = vec![ValidatorResult::new(
        "mean_energy_within_3se",
        within,
        "|mean 𝓔 - 1/(12N)| <= 3 standard errors".into(),
    )];
    let mut out = Artifacts::default();
    out.add_table("nbody.csv", &table);
    out.add_summary(&s);
    Ok(out)
}
