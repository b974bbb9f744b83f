use std::f64::consts::{E, PI};

use proptest::prelude::*;

use super::*;
use crate::euler_isothermal::EulerState;
use crate::grid_spectral::{dirichlet_energy, gradient, ComplexField, TorusGrid};
use crate::initial_data::{well_prepared, WellPreparedSpec};
use crate::poisson_boltzmann::solve_pb;
use crate::test_support::{adaptive_simpson, Lcg};

fn grid1(n: usize) -> TorusGrid {
    TorusGrid::new(1, n).unwrap()
}

/// `1 + Σ_k a_k cos(2πkx + φ_k)` with modes up to 3, kept positive.
fn random_trig(grid: TorusGrid, rng: &mut Lcg, amp: f64) -> RealField {
    let terms: Vec<(f64, f64)> = (1..=3)
        .map(|_| (amp * (2.0 * rng.next_f64() - 1.0), 2.0 * PI * rng.next_f64()))
        .collect();
    RealField::from_fn(grid, |p| {
        terms
            .iter()
            .enumerate()
            .map(|(k, (a, ph))| a * (2.0 * PI * (k + 1) as f64 * p[0] + ph).cos())
            .sum::<f64>()
    })
}

fn random_density(grid: TorusGrid, rng: &mut Lcg) -> RealField {
    let f = random_trig(grid, rng, 0.5).exp();
    let mass = f.integrate();
    f.scaled(1.0 / mass)
}

fn random_wave(grid: TorusGrid, rng: &mut Lcg, hbar: f64, eps: f64) -> WaveFunction {
    let amp = random_density(grid, rng);
    let phase = random_trig(grid, rng, 1.0);
    let psi = ComplexField::from_fn(grid, |p| {
        let j = (p[0] / grid.spacing()).round() as usize % grid.points_per_axis();
        Complex64::from_polar(amp.values()[j].sqrt(), phase.values()[j])
    });
    WaveFunction::new(psi, hbar, eps, 0.0).unwrap()
}

fn random_euler(grid: TorusGrid, rng: &mut Lcg) -> EulerState {
    let rho = random_density(grid, rng);
    EulerState::new(rho.map(f64::ln), vec![random_trig(grid, rng, 0.5)], 0.0).unwrap()
}

#[test]
fn kinetic_of_wkb_state_is_amplitude_gradient() {
    let grid = grid1(256);
    let hbar = 0.07;
    let spec = WellPreparedSpec::cosine_profile(grid, 0.4, 0.8, 0.001, hbar);
    let w = well_prepared(&spec).unwrap();
    let u = gradient(&spec.u0);
    let amplitude = density(&w).map(f64::sqrt);
    let expected = 0.5 * hbar * hbar * dirichlet_energy(&amplitude);
    assert!((kinetic_modulated(&w, &u).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn kinetic_vanishes_for_matched_plane_wave() {
    let grid = grid1(32);
    let hbar = 0.3;
    let psi = ComplexField::from_fn(grid, |p| Complex64::from_polar(1.0, 2.0 * PI * p[0]));
    let w = WaveFunction::new(psi, hbar, 1.0, 0.0).unwrap();
    let u = vec![RealField::constant(grid, 2.0 * PI * hbar)];
    assert!(kinetic_modulated(&w, &u).unwrap() < 1e-24);
}

#[test]
fn kinetic_without_flow_matches_total_energy() {
    let grid = grid1(128);
    let mut rng = Lcg(5);
    for _ in 0..5 {
        let w = random_wave(grid, &mut rng, 0.2, 0.1);
        let split = solve_pb(&density(&w), 0.1).unwrap();
        let k = kinetic_modulated(&w, &[RealField::zeros(grid)]).unwrap();
        let f = total_energy(&w, &split);
        assert!((k - f.kinetic).abs() < 1e-12 * (1.0 + k));
    }
    assert_eq!(
        kinetic_modulated(&random_wave(grid, &mut rng, 0.2, 0.1), &[RealField::zeros(grid1(8))]),
        Err(ModulatedError::GridMismatch)
    );
}

#[test]
fn relative_entropy_examples() {
    let grid = grid1(64);
    let rho = RealField::from_fn(grid, |p| 1.0 + 0.5 * (2.0 * PI * p[0]).sin());
    assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-15);
    let re = relative_entropy(&RealField::constant(grid, 1.0), &RealField::constant(grid, E)).unwrap();
    assert!((re - (E - 2.0)).abs() < 1e-14);
    // Vacuum contributes only ρ.
    let re = relative_entropy(&RealField::zeros(grid), &rho).unwrap();
    assert!((re - 1.0).abs() < 1e-14);
}

#[test]
fn relative_entropy_matches_quadrature() {
    let m = |x: f64| 1.0 + 0.2 * (2.0 * PI * x).cos();
    let oracle = adaptive_simpson(&|x| m(x) * m(x).ln() - m(x) + 1.0, 0.0, 1.0, 1e-14);
    let grid = grid1(256);
    let re = relative_entropy(&RealField::from_fn(grid, |p| m(p[0])), &RealField::constant(grid, 1.0))
        .unwrap();
    assert!((re - oracle).abs() < 1e-10, "{re} vs {oracle}");
}

#[test]
fn relative_entropy_rejects_bad_inputs() {
    let grid = grid1(16);
    let one = RealField::constant(grid, 1.0);
    let zero = RealField::zeros(grid);
    assert!(matches!(
        relative_entropy(&one, &zero),
        Err(ModulatedError::NonpositiveReference(_))
    ));
    assert!(matches!(
        relative_entropy(&one.scaled(-1.0), &one),
        Err(ModulatedError::NegativeDensity(_))
    ));
    assert_eq!(relative_entropy(&one, &RealField::constant(grid1(8), 1.0)), Err(ModulatedError::GridMismatch));
}

#[test]
fn ckp_trivial_and_cosine_cases() {
    let grid = grid1(256);
    let one = RealField::constant(grid, 1.0);
    let r = ckp_check(&one, &one, 1e-8).unwrap();
    assert!(r.holds && r.l1 == 0.0 && r.bound == 0.0);

    let m = |x: f64| 1.0 + 0.3 * (2.0 * PI * x).cos();
    let r = ckp_check(&RealField::from_fn(grid, |p| m(p[0])), &one, 1e-8).unwrap();
    let l1 = adaptive_simpson(&|x| (m(x) - 1.0).abs(), 0.0, 1.0, 1e-13);
    let ent = adaptive_simpson(&|x| m(x) * m(x).ln(), 0.0, 1.0, 1e-13);
    // The kinks of |m - 1| limit the grid rule to O(h²).
    assert!((r.l1 - l1).abs() < 1e-4);
    assert!((r.entropy - ent).abs() < 1e-10);
    assert!(r.holds && r.bound - r.l1 > 0.01);
    assert!(matches!(
        ckp_check(&one.scaled(2.0), &one, 1e-8),
        Err(ModulatedError::NotNormalized(_))
    ));
}

#[test]
fn ckp_holds_on_random_pairs() {
    let grid = grid1(512);
    let mut rng = Lcg(17);
    for trial in 0..100 {
        let m = random_density(grid, &mut rng);
        let rho = random_density(grid, &mut rng);
        let r = ckp_check(&m, &rho, 1e-8).unwrap();
        assert!(r.holds, "trial {trial}: {r:?}");
    }
}

#[test]
fn well_prepared_energy_matches_closed_form() {
    let grid = grid1(512);
    let eps = 0.01;
    let spec = WellPreparedSpec::cosine_profile(grid, 0.5, 0.1, eps, 0.02);
    let w = well_prepared(&spec).unwrap();
    let split = solve_pb(&density(&w), eps).unwrap();
    let u0 = gradient(&spec.u0);
    let euler = EulerState::new(spec.v0(), u0, 0.0).unwrap();
    let r = modulated_total(&w, &split, &euler).unwrap();
    assert!(r.relative_entropy.abs() < 1e-12);
    assert!((r.field_energy - 0.5 * eps * dirichlet_energy(&spec.v0())).abs() < 1e-10);
    let amp = spec.amplitude_squared().map(f64::sqrt);
    assert!((r.kinetic_modulated - 0.5 * 0.02 * 0.02 * dirichlet_energy(&amp)).abs() < 1e-12);
    assert!((r.total_modulated - spec.closed_form_energy().unwrap()).abs() < 1e-8);
}

#[test]
fn equilibrium_has_zero_energy_and_distances() {
    let grid = grid1(32);
    let w = WaveFunction::new(ComplexField::from_fn(grid, |_| 1.0.into()), 0.1, 0.1, 0.0).unwrap();
    let split = solve_pb(&density(&w), 0.1).unwrap();
    let euler = EulerState::equilibrium(grid);
    let r = modulated_total(&w, &split, &euler).unwrap();
    assert_eq!(r.total_modulated, 0.0);
    let d = weak_distances(&w, &split, &euler, &default_test_fields(grid)).unwrap();
    assert!(d.h_minus1_density_error < 1e-15 && d.l1_entropy_error < 1e-15);
    assert!(d.max_current_error() < 1e-15);
}

#[test]
fn flat_reference_reproduces_total_energy() {
    let grid = grid1(128);
    let mut rng = Lcg(31);
    for _ in 0..5 {
        let w = random_wave(grid, &mut rng, 0.1, 0.2);
        let split = solve_pb(&density(&w), 0.2).unwrap();
        let r = modulated_total(&w, &split, &EulerState::equilibrium(grid)).unwrap();
        let m = split.boltzmann_density();
        let bookkeeping = m.map(|v| 1.0 - v).integrate();
        assert!((r.total_modulated - (r.conserved_total + bookkeeping)).abs() < 1e-12);
        assert!(bookkeeping.abs() < 1e-9);
    }
}

#[test]
fn current_errors_respect_the_kinetic_bound() {
    let grid = grid1(128);
    let mut rng = Lcg(77);
    for _ in 0..20 {
        let hbar = 0.05 + 0.2 * rng.next_f64();
        let w = random_wave(grid, &mut rng, hbar, 0.1);
        let split = solve_pb(&density(&w), 0.1).unwrap();
        let euler = random_euler(grid, &mut rng);
        let d = weak_distances(&w, &split, &euler, &default_test_fields(grid)).unwrap();
        for (e, b) in d.current_errors.iter().zip(&d.current_bounds) {
            assert!(*e <= b + 1e-10, "{e} > {b}");
        }
    }
}

#[test]
fn reports_are_invariant_under_global_phase() {
    let grid = grid1(64);
    let mut rng = Lcg(3);
    let w = random_wave(grid, &mut rng, 0.1, 0.1);
    let split = solve_pb(&density(&w), 0.1).unwrap();
    let euler = random_euler(grid, &mut rng);
    let a = modulated_total(&w, &split, &euler).unwrap();
    let b = modulated_total(&w.with_global_phase(1.3), &split, &euler).unwrap();
    assert!((a.kinetic_modulated - b.kinetic_modulated).abs() < 1e-13 * (1.0 + a.kinetic_modulated));
    assert!((a.total_modulated - b.total_modulated).abs() < 1e-12 * (1.0 + a.total_modulated));
    let fields = default_test_fields(grid);
    let da = weak_distances(&w, &split, &euler, &fields).unwrap();
    let db = weak_distances(&w.with_global_phase(-0.4), &split, &euler, &fields).unwrap();
    for (x, y) in da.current_errors.iter().zip(&db.current_errors) {
        assert!((x - y).abs() < 1e-13);
    }
}

#[test]
fn tiny_entropy_forces_small_l1_distance() {
    let grid = grid1(256);
    let rho = RealField::from_fn(grid, |p| 1.0 + 0.4 * (2.0 * PI * p[0]).sin());
    let mut seen = 0;
    for k in 0..12 {
        let delta = 10f64.powi(-k);
        let m = rho.zip_map(
            &RealField::from_fn(grid, |p| (6.0 * PI * p[0]).cos()),
            |r, c| r * (1.0 + delta * c),
        );
        if relative_entropy(&m, &rho).unwrap() < 1e-10 {
            seen += 1;
            assert!(l1_norm(&(&m - &rho)) < 1e-4);
        }
    }
    assert!(seen >= 6);
}

#[test]
fn mismatched_grids_are_rejected() {
    let w = WaveFunction::new(ComplexField::from_fn(grid1(16), |_| 1.0.into()), 0.1, 0.1, 0.0).unwrap();
    let split = solve_pb(&density(&w), 0.1).unwrap();
    let euler = EulerState::equilibrium(grid1(32));
    assert_eq!(modulated_total(&w, &split, &euler).unwrap_err(), ModulatedError::GridMismatch);
    assert!(weak_distances(&w, &split, &euler, &[]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn report_parts_are_nonnegative_and_sum(seed in any::<u64>(), hbar in 0.02f64..0.5, eps in 0.05f64..1.0) {
        let grid = grid1(64);
        let mut rng = Lcg(seed);
        let w = random_wave(grid, &mut rng, hbar, eps);
        let split = solve_pb(&density(&w), eps).unwrap();
        let r = modulated_total(&w, &split, &random_euler(grid, &mut rng)).unwrap();
        prop_assert!(r.kinetic_modulated >= -1e-12);
        prop_assert!(r.field_energy >= -1e-12);
        prop_assert!(r.relative_entropy >= -1e-12);
        prop_assert_eq!(r.total_modulated, r.kinetic_modulated + r.field_energy + r.relative_entropy);
    }
}
