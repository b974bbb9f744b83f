use std::f64::consts::PI;

use super::*;

fn grid1(n: usize) -> TorusGrid {
    TorusGrid::new(1, n).unwrap()
}

fn state(grid: TorusGrid, l: impl Fn(f64) -> f64, u: impl Fn(f64) -> f64) -> EulerState {
    EulerState::new(
        RealField::from_fn(grid, |p| l(p[0])),
        vec![RealField::from_fn(grid, |p| u(p[0]))],
        0.0,
    )
    .unwrap()
}

fn generic(n: usize) -> EulerState {
    let raw = state(
        grid1(n),
        |x| 0.2 * (2.0 * PI * x).cos() + 0.05 * (4.0 * PI * x).sin(),
        |x| 0.1 * (2.0 * PI * x).sin() + 0.05 * (6.0 * PI * x).cos(),
    );
    let shift = raw.mass().ln();
    EulerState::new(raw.log_rho.map(|v| v - shift), raw.u, 0.0).unwrap()
}

fn distance(a: &EulerState, b: &EulerState) -> f64 {
    let mut d = (&a.log_rho - &b.log_rho).sup_norm();
    for (x, y) in a.u.iter().zip(&b.u) {
        d = d.max((x - y).sup_norm());
    }
    d
}

#[test]
fn rhs_of_simple_states() {
    let grid = grid1(32);
    let r = euler_rhs(&EulerState::equilibrium(grid));
    assert_eq!(r.log_rho.sup_norm(), 0.0);
    assert_eq!(r.u[0].sup_norm(), 0.0);

    let r = euler_rhs(&state(grid, |_| 0.0, |_| 0.7));
    assert!(r.log_rho.sup_norm() < 1e-14 && r.u[0].sup_norm() < 1e-14);

    let r = euler_rhs(&state(grid, |x| 0.1 * (2.0 * PI * x).cos(), |_| 0.0));
    let expected = RealField::from_fn(grid, |p| 0.2 * PI * (2.0 * PI * p[0]).sin());
    assert!((&r.u[0] - &expected).sup_norm() < 1e-13);
    assert!(r.log_rho.sup_norm() < 1e-15);
}

#[test]
fn two_dimensional_rhs_is_stationary_for_uniform_flow() {
    let grid = TorusGrid::new(2, 16).unwrap();
    let s = EulerState::new(
        RealField::zeros(grid),
        vec![RealField::constant(grid, 0.3), RealField::constant(grid, -0.2)],
        0.0,
    )
    .unwrap();
    let r = euler_rhs(&s);
    assert!(r.log_rho.sup_norm() < 1e-14);
    assert!(r.u.iter().all(|c| c.sup_norm() < 1e-14));
}

#[test]
fn constant_trajectory() {
    let s = EulerState::equilibrium(grid1(16));
    let traj = run_euler(&s, 1.0, 0.05, 5).unwrap();
    assert_eq!(traj.len(), 5);
    assert!(traj.iter().all(|t| distance(t, &s) == 0.0));
    assert!((traj.last().unwrap().time - 1.0).abs() < 1e-15);
    let c = euler_constants(&traj);
    assert_eq!(c.sup_grad_u, 0.0);
    assert_eq!(c.log_rho_w1inf_h1, 0.0);
    assert_eq!(c.sup_grad_transport, 0.0);
}

#[test]
fn small_data_follows_linear_waves() {
    let a = 1e-3;
    let grid = grid1(64);
    let s0 = state(grid, |x| a * (2.0 * PI * x).cos(), |_| 0.0);
    let t_end = 0.7;
    let last = run_euler(&s0, t_end, 1e-3, 1000).unwrap().pop().unwrap();
    let linear = RealField::from_fn(grid, |p| a * (2.0 * PI * p[0]).cos() * (2.0 * PI * t_end).cos());
    let err = (&last.log_rho - &linear).sup_norm();
    assert!(err <= 10.0 * a * a, "err = {err:e}");
}

#[test]
fn rk4_converges_at_fourth_order() {
    let s0 = generic(64);
    let t_end = 0.2;
    let terminal = |dt: f64| run_euler(&s0, t_end, dt, usize::MAX).unwrap().pop().unwrap();
    let reference = terminal(0.02 / 32.0);
    let e1 = distance(&terminal(0.02), &reference);
    let e2 = distance(&terminal(0.01), &reference);
    let order = (e1 / e2).log2();
    assert!(order >= 3.8, "order {order} ({e1:e}, {e2:e})");
}

#[test]
fn mass_is_conserved() {
    let s0 = generic(128);
    for s in run_euler(&s0, 0.5, 1e-3, 50).unwrap() {
        assert!((s.mass() - 1.0).abs() < 1e-8, "t = {}", s.time);
    }
}

#[test]
fn reflection_symmetry_is_preserved() {
    let n = 64;
    let s0 = state(
        grid1(n),
        |x| 0.3 * (2.0 * PI * x).cos() + 0.1 * (4.0 * PI * x).cos(),
        |x| 0.2 * (2.0 * PI * x).sin(),
    );
    let last = run_euler(&s0, 0.3, 1e-3, 1000).unwrap().pop().unwrap();
    let (l, u) = (last.log_rho.values(), last.u[0].values());
    for j in 0..n {
        let m = (n - j) % n;
        assert!((l[j] - l[m]).abs() < 1e-12);
        assert!((u[j] + u[m]).abs() < 1e-12);
    }
}

#[test]
fn constants_of_a_frozen_sine_velocity() {
    let s = state(grid1(64), |_| 0.0, |x| (2.0 * PI * x).sin());
    let c = euler_constants(std::slice::from_ref(&s));
    assert!((c.sup_grad_u - 2.0 * PI).abs() < 1e-12);
    assert_eq!(c.sup_grad_transport, 0.0);
}

fn h1(f: &RealField) -> f64 {
    let g = gradient(f)[0].l2_norm();
    (f.l2_norm().powi(2) + g * g).sqrt()
}

#[test]
fn constants_match_finite_differences_in_time() {
    let s0 = generic(64);
    let dt = 1e-3;
    let traj = run_euler(&s0, 0.3, dt, 1).unwrap();
    let c = euler_constants(&traj);
    let sup_l = traj.iter().map(|s| h1(&s.log_rho)).fold(0.0, f64::max);
    let sup_dl = traj
        .windows(3)
        .map(|w| h1(&(&w[2].log_rho - &w[0].log_rho).scaled(0.5 / dt)))
        .fold(0.0, f64::max);
    let oracle = sup_l + sup_dl;
    assert!((c.log_rho_w1inf_h1 - oracle).abs() <= 0.05 * oracle);
    let sup_grad_u = traj
        .iter()
        .map(|s| {
            let v = s.u[0].values();
            let h = s.grid().spacing();
            (0..v.len())
                .map(|j| (v[(j + 1) % v.len()] - v[j]).abs() / h)
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    assert!((c.sup_grad_u - sup_grad_u).abs() <= 0.05 * sup_grad_u);
}

#[test]
fn blowup_guard_trips_on_compressive_data() {
    let s0 = state(grid1(64), |_| 0.0, |x| -3.0 * (2.0 * PI * x).sin());
    match run_euler(&s0, 1.0, 1e-3, 10) {
        Err(EulerError::BlowupGuardTripped { time, value }) => {
            assert!(value > BLOWUP_THRESHOLD && time < 1.0);
        }
        other => panic!("expected the guard, got {:?}", other.map(|t| t.len())),
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let grid = grid1(8);
    assert!(EulerState::new(RealField::zeros(grid), vec![], 0.0).is_err());
    let s = EulerState::equilibrium(grid);
    assert!(run_euler(&s, 1.0, 0.0, 1).is_err());
    assert!(run_euler(&s, 1.0, 0.1, 0).is_err());
}
