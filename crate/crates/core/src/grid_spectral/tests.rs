use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::test_support::{adaptive_simpson, Lcg};

fn grid1(n: usize) -> TorusGrid {
    TorusGrid::new(1, n).unwrap()
}

fn random_mean_zero(grid: TorusGrid, seed: u64, modes: i64) -> RealField {
    let mut rng = Lcg(seed);
    let terms: Vec<(f64, f64, f64, f64)> = (0..8)
        .map(|_| {
            (
                rng.next_f64() - 0.5,
                (1.0 + (rng.next_f64() * modes as f64).floor()),
                (rng.next_f64() * (modes as f64 + 1.0)).floor(),
                rng.next_f64() * 2.0 * PI,
            )
        })
        .collect();
    RealField::from_fn(grid, |p| {
        terms
            .iter()
            .map(|&(a, kx, ky, phase)| {
                let ky = if grid.dim() == 2 { ky } else { 0.0 };
                a * (2.0 * PI * (kx * p[0] + ky * p[1]) + phase).cos()
            })
            .sum()
    })
}

#[test]
fn rejects_bad_grids() {
    assert!(matches!(
        TorusGrid::new(3, 16),
        Err(GridError::UnsupportedDimension(3))
    ));
    assert!(matches!(
        TorusGrid::new(1, 4),
        Err(GridError::BadResolution(4))
    ));
    assert!(matches!(
        TorusGrid::new(1, 24),
        Err(GridError::BadResolution(24))
    ));
    assert_eq!(TorusGrid::new(2, 8).unwrap().len(), 64);
}

#[test]
fn from_values_validates() {
    let g = grid1(8);
    assert!(RealField::from_values(g, vec![0.0; 7]).is_err());
    assert_eq!(
        RealField::from_values(g, vec![f64::NAN; 8]),
        Err(GridError::NonFinite)
    );
}

#[test]
fn derivative_of_sine() {
    let g = grid1(64);
    let f = RealField::from_fn(g, |p| (2.0 * PI * p[0]).sin());
    let df = spectral_derivative(&f, 0).unwrap();
    for (i, v) in df.values().iter().enumerate() {
        let x = g.node(i)[0];
        assert!((v - 2.0 * PI * (2.0 * PI * x).cos()).abs() < 1e-12);
    }
}

#[test]
fn derivative_of_constant_vanishes() {
    let f = RealField::constant(grid1(32), 1.0);
    assert!(f.derivative(0).unwrap().sup_norm() < 1e-15);
}

#[test]
fn derivative_axis_out_of_range() {
    let f = RealField::constant(grid1(16), 1.0);
    assert_eq!(
        f.derivative(1),
        Err(GridError::AxisOutOfRange { axis: 1, dim: 1 })
    );
}

#[test]
fn derivative_drops_nyquist() {
    let g = grid1(16);
    let f = RealField::from_fn(g, |p| (PI * 16.0 * p[0]).cos());
    assert!(f.derivative(0).unwrap().sup_norm() < 1e-12);
}

#[test]
fn derivative_agrees_with_centered_differences() {
    // Centered differences on a refined grid converge at O(h^2) to the
    // spectral derivative.
    let f = |x: f64| (2.0 * PI * x).sin() + (4.0 * PI * x).cos();
    let g = grid1(32);
    let df = RealField::from_fn(g, |p| f(p[0])).derivative(0).unwrap();
    let mut errors = Vec::new();
    for h in [1e-2, 5e-3, 2.5e-3] {
        let err = (0..g.len())
            .map(|i| {
                let x = g.node(i)[0];
                let fd = (f(x + h) - f(x - h)) / (2.0 * h);
                (fd - df.values()[i]).abs()
            })
            .fold(0.0, f64::max);
        errors.push(err);
    }
    for pair in errors.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }
}

#[test]
fn complex_derivative_of_plane_wave() {
    let g = grid1(32);
    let f = ComplexField::from_fn(g, |p| Complex64::from_polar(1.0, 2.0 * PI * 3.0 * p[0]));
    let df = f.derivative(0).unwrap();
    for (a, b) in df.values().iter().zip(f.values()) {
        assert!((a - b * Complex64::new(0.0, 6.0 * PI)).norm() < 1e-11);
    }
}

#[test]
fn inverse_laplacian_single_mode() {
    let g = grid1(32);
    let f = RealField::from_fn(g, |p| (2.0 * PI * p[0]).cos());
    let u = inverse_laplacian_zero_mean(&f).unwrap();
    for (a, b) in u.values().iter().zip(f.values()) {
        assert!((a - b / (4.0 * PI * PI)).abs() < 1e-15);
    }
    assert!(inverse_laplacian_zero_mean(&RealField::zeros(g))
        .unwrap()
        .sup_norm()
        .eq(&0.0));
}

#[test]
fn inverse_laplacian_product_mode_2d() {
    let g = TorusGrid::new(2, 16).unwrap();
    let f = RealField::from_fn(g, |p| (2.0 * PI * p[0]).cos() * (2.0 * PI * p[1]).cos());
    let u = inverse_laplacian_zero_mean(&f).unwrap();
    for (a, b) in u.values().iter().zip(f.values()) {
        assert!((a - b / (8.0 * PI * PI)).abs() < 1e-15);
    }
}

#[test]
fn inverse_laplacian_rejects_mean() {
    let f = RealField::constant(grid1(16), 0.5);
    assert!(matches!(
        inverse_laplacian_zero_mean(&f),
        Err(GridError::NonZeroMean { .. })
    ));
    assert!(matches!(h_minus1_norm(&f), Err(GridError::NonZeroMean { .. })));
}

#[test]
fn integrate_basics() {
    let g = grid1(256);
    assert!((integrate(&RealField::constant(g, 1.0)) - 1.0).abs() < 1e-15);
    let s = RealField::from_fn(g, |p| (2.0 * PI * p[0]).sin());
    assert!(integrate(&s).abs() < 1e-15);
}

#[test]
fn integrate_matches_adaptive_quadrature() {
    let g = grid1(256);
    let f = |x: f64| (2.0 * PI * x).cos().exp();
    let oracle = adaptive_simpson(&f, 0.0, 1.0, 1e-14);
    let value = integrate(&RealField::from_fn(g, |p| f(p[0])));
    assert!((value - oracle).abs() < 1e-12, "{value} vs {oracle}");
}

#[test]
fn h_minus1_of_cosine() {
    let f = RealField::from_fn(grid1(64), |p| (2.0 * PI * p[0]).cos());
    let expected = 1.0 / (2.0 * PI * 2f64.sqrt());
    assert!((h_minus1_norm(&f).unwrap() - expected).abs() < 1e-15);
    assert_eq!(h_minus1_norm(&RealField::zeros(grid1(8))).unwrap(), 0.0);
}

#[test]
fn h_minus1_matches_gradient_of_inverse_laplacian() {
    for (dim, n) in [(1, 64), (2, 32)] {
        let g = TorusGrid::new(dim, n).unwrap();
        let f = random_mean_zero(g, 17 + dim as u64, 6);
        let u = inverse_laplacian_zero_mean(&f).unwrap();
        let grad_sq: f64 = gradient(&u)
            .iter()
            .map(|d| d.values().iter().map(|v| v * v).sum::<f64>() / g.len() as f64)
            .sum();
        let direct = h_minus1_norm(&f).unwrap();
        assert!((direct - grad_sq.sqrt()).abs() < 1e-13 * direct.max(1.0));
    }
}

#[test]
fn parseval() {
    let g = TorusGrid::new(2, 16).unwrap();
    let f = random_mean_zero(g, 5, 5).map(|v| v + 0.3);
    let physical = f.l2_norm().powi(2);
    let fourier: f64 = fourier_coefficients(&f).iter().map(|c| c.norm_sqr()).sum();
    assert!((physical - fourier).abs() / physical < 1e-12);
}

#[test]
fn derivative_of_inverse_laplacian_twice_recovers_minus_f() {
    for (dim, n) in [(1, 64), (2, 32)] {
        let g = TorusGrid::new(dim, n).unwrap();
        let f = random_mean_zero(g, 99, 5);
        let u = inverse_laplacian_zero_mean(&f).unwrap();
        let mut lap = RealField::zeros(g);
        for axis in 0..dim {
            let d2 = u.derivative(axis).unwrap().derivative(axis).unwrap();
            lap = &lap + &d2;
        }
        let err = (&lap + &f).sup_norm();
        assert!(err < 1e-10, "dim {dim}: {err}");
    }
}

#[test]
fn trig_interpolant_reproduces_band_limited_function() {
    let g = grid1(32);
    let f = |x: f64| 0.3 + (2.0 * PI * x).sin() - 0.25 * (2.0 * PI * 5.0 * x).cos();
    let interp = TrigInterpolant::new(&RealField::from_fn(g, |p| f(p[0])));
    for x in [0.013, 0.31, 0.777, 0.999] {
        assert!((interp.eval(x) - f(x)).abs() < 1e-13);
    }
}

#[test]
fn dealias_removes_high_modes() {
    let g = grid1(32);
    let f = RealField::from_fn(g, |p| (2.0 * PI * p[0]).cos() + (2.0 * PI * 12.0 * p[0]).cos());
    let d = dealias(&f);
    for (i, v) in d.values().iter().enumerate() {
        assert!((v - (2.0 * PI * g.node(i)[0]).cos()).abs() < 1e-13);
    }
}

#[test]
fn fourier_round_trip() {
    let g = TorusGrid::new(2, 8).unwrap();
    let f = random_mean_zero(g, 3, 3);
    let back = real_from_fourier_coefficients(g, &fourier_coefficients(&f));
    assert!((&back - &f).sup_norm() < 1e-14);
}

proptest! {
    #[test]
    fn integrate_is_linear_and_positive(
        a in -3.0f64..3.0,
        seed in 0u64..1000,
    ) {
        let g = grid1(32);
        let f = random_mean_zero(g, seed, 4).map(|v| v + 2.0);
        let h = random_mean_zero(g, seed + 1, 4);
        let combo = f.zip_map(&h, |x, y| a * x + y);
        prop_assert!((integrate(&combo) - (a * integrate(&f) + integrate(&h))).abs() < 1e-12);
        let nonneg = f.map(|v| v.abs());
        prop_assert!(integrate(&nonneg) >= 0.0);
    }
}
