//! Exact 1-Wasserstein distance on the unit circle.
//!
//! `W₁(μ, ν) = min_c ∫₀¹ |F_μ - F_ν - c|`. Densities contribute the CDF of
//! their periodic linear interpolant (piecewise quadratic), configurations a
//! step function, so `G = F_μ - F_ν` is a polynomial of degree ≤ 2 on every
//! piece between consecutive grid nodes and particle positions.

use crate::grid_spectral::SpectralField;
use crate::poisson_boltzmann::{MeasureRef, MASS_TOLERANCE};

use super::NbodyError;

/// `G(a + t) = q[0] + q[1] t + q[2] t²` for `t ∈ [0, len]`.
#[derive(Clone, Copy, Debug)]
struct Piece {
    q: [f64; 3],
    len: f64,
}

impl Piece {
    fn eval(&self, t: f64) -> f64 {
        self.q[0] + t * (self.q[1] + t * self.q[2])
    }

    fn antiderivative(&self, t: f64) -> f64 {
        t * (self.q[0] + t * (self.q[1] / 2.0 + t * self.q[2] / 3.0))
    }

    /// Roots of `G - c` strictly inside `(0, len)`, sorted.
    fn crossings(&self, c: f64) -> Vec<f64> {
        let (a, b, q2) = (self.q[0] - c, self.q[1], self.q[2]);
        let mut roots = Vec::with_capacity(2);
        if q2 == 0.0 {
            if b != 0.0 {
                roots.push(-a / b);
            }
        } else {
            let disc = b * b - 4.0 * q2 * a;
            if disc >= 0.0 {
                let s = -0.5 * (b + b.signum() * disc.sqrt());
                if s != 0.0 {
                    roots.push(s / q2);
                    roots.push(a / s);
                } else {
                    roots.push(0.0);
                }
            }
        }
        roots.retain(|t| *t > 0.0 && *t < self.len);
        roots.sort_by(f64::total_cmp);
        roots
    }

    fn split_points(&self, c: f64) -> Vec<f64> {
        let mut pts = vec![0.0];
        pts.extend(self.crossings(c));
        pts.push(self.len);
        pts
    }

    /// `∫|G - c|` over the piece.
    fn abs_integral(&self, c: f64) -> f64 {
        let pts = self.split_points(c);
        pts.windows(2)
            .map(|w| {
                (self.antiderivative(w[1]) - self.antiderivative(w[0]) - c * (w[1] - w[0])).abs()
            })
            .sum()
    }

    /// Length of `{G < c}` within the piece.
    fn below(&self, c: f64) -> f64 {
        let pts = self.split_points(c);
        pts.windows(2)
            .filter(|w| self.eval(0.5 * (w[0] + w[1])) < c)
            .map(|w| w[1] - w[0])
            .sum()
    }

    fn range(&self) -> (f64, f64) {
        let mut vals = vec![self.eval(0.0), self.eval(self.len)];
        if self.q[2] != 0.0 {
            let t = -self.q[1] / (2.0 * self.q[2]);
            if t > 0.0 && t < self.len {
                vals.push(self.eval(t));
            }
        }
        vals.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            })
    }
}

enum Cdf<'a> {
    Density {
        values: &'a [f64],
        cumulative: Vec<f64>,
        mass: f64,
        h: f64,
    },
    Empirical {
        sorted: Vec<f64>,
    },
}

impl<'a> Cdf<'a> {
    fn new(m: MeasureRef<'a>) -> Result<Self, NbodyError> {
        match m {
            MeasureRef::Density(rho) => {
                if rho.grid().dim() != 1 {
                    return Err(NbodyError::NotOneDimensional);
                }
                if rho.min() < 0.0 || (rho.integrate() - 1.0).abs() > MASS_TOLERANCE {
                    return Err(NbodyError::NotAProbability);
                }
                let values = rho.values();
                let n = values.len();
                let h = rho.grid().spacing();
                let mut cumulative = Vec::with_capacity(n + 1);
                let mut acc = 0.0;
                cumulative.push(0.0);
                for j in 0..n {
                    acc += 0.5 * h * (values[j] + values[(j + 1) % n]);
                    cumulative.push(acc);
                }
                Ok(Cdf::Density {
                    values,
                    cumulative,
                    mass: acc,
                    h,
                })
            }
            MeasureRef::Empirical(x) => {
                let mut sorted = x.positions().to_vec();
                sorted.sort_by(f64::total_cmp);
                Ok(Cdf::Empirical { sorted })
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Cdf::Density { values, h, .. } => (0..values.len()).map(|j| j as f64 * h).collect(),
            Cdf::Empirical { sorted } => sorted.clone(),
        }
    }

    /// Taylor coefficients of the (right-continuous) CDF at `a`.
    fn local(&self, a: f64) -> [f64; 3] {
        match self {
            Cdf::Density {
                values,
                cumulative,
                mass,
                h,
            } => {
                let n = values.len();
                let j = ((a / h).floor() as usize).min(n - 1);
                let t0 = a - j as f64 * h;
                let r0 = values[j];
                let slope = (values[(j + 1) % n] - r0) / h;
                let f = cumulative[j] + r0 * t0 + 0.5 * slope * t0 * t0;
                [f / mass, (r0 + slope * t0) / mass, 0.5 * slope / mass]
            }
            Cdf::Empirical { sorted } => {
                let count = sorted.partition_point(|x| *x <= a);
                [count as f64 / sorted.len() as f64, 0.0, 0.0]
            }
        }
    }
}

/// `G = F_μ - F_ν` as exact polynomial pieces covering `[0, 1)`.
pub struct CdfDifference {
    pieces: Vec<Piece>,
}

impl CdfDifference {
    pub fn new(mu: MeasureRef, nu: MeasureRef) -> Result<Self, NbodyError> {
        let (fm, fn_) = (Cdf::new(mu)?, Cdf::new(nu)?);
        let mut cuts = fm.breakpoints();
        cuts.extend(fn_.breakpoints());
        cuts.push(0.0);
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let pieces = cuts
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let (a, b) = (fm.local(w[0]), fn_.local(w[0]));
                Piece {
                    q: [a[0] - b[0], a[1] - b[1], a[2] - b[2]],
                    len: w[1] - w[0],
                }
            })
            .collect();
        Ok(Self { pieces })
    }

    /// `∫|G - c|`.
    pub fn shifted_l1(&self, c: f64) -> f64 {
        self.pieces.iter().map(|p| p.abs_integral(c)).sum()
    }

    /// A median of `G`, the minimizer of [`Self::shifted_l1`].
    pub fn median(&self) -> f64 {
        let (mut lo, mut hi) = self
            .pieces
            .iter()
            .map(Piece::range)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (a, b)| {
                (l.min(a), h.max(b))
            });
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let below: f64 = self.pieces.iter().map(|p| p.below(mid)).sum();
            if below < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn w1(&self) -> f64 {
        self.shifted_l1(self.median())
    }

    pub fn mean(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.antiderivative(p.len))
            .sum()
    }

    /// `||G - ∫G||₂`.
    pub fn centered_l2(&self) -> f64 {
        let g = self.mean();
        self.pieces
            .iter()
            .map(|p| {
                let (a, b, c) = (p.q[0] - g, p.q[1], p.q[2]);
                let l = p.len;
                // ∫₀ˡ (a + b t + c t²)² dt
                l * (a * a
                    + l * (a * b
                        + l * ((b * b + 2.0 * a * c) / 3.0 + l * (b * c / 2.0 + l * c * c / 5.0))))
            })
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }
}

/// Circular `W₁(μ, ν)`.
pub fn w1_circle(mu: MeasureRef, nu: MeasureRef) -> Result<f64, NbodyError> {
    Ok(CdfDifference::new(mu, nu)?.w1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_spectral::{RealField, TorusGrid};
    use crate::poisson_boltzmann::ParticleConfig;
    use crate::test_support::{adaptive_simpson, Lcg};
    use std::f64::consts::PI;

    fn config(x: &[f64]) -> ParticleConfig {
        ParticleConfig::new(x.to_vec()).unwrap()
    }

    #[test]
    fn antipodal_diracs() {
        let (a, b) = (config(&[0.0]), config(&[0.5]));
        let d = w1_circle(MeasureRef::Empirical(&a), MeasureRef::Empirical(&b)).unwrap();
        assert!((d - 0.5).abs() < 1e-14);
        // The circular distance wraps: 0.1 and 0.9 are 0.2 apart.
        let (a, b) = (config(&[0.1]), config(&[0.9]));
        let d = w1_circle(MeasureRef::Empirical(&a), MeasureRef::Empirical(&b)).unwrap();
        assert!((d - 0.2).abs() < 1e-14);
    }

    #[test]
    fn identical_measures() {
        let x = config(&[0.1, 0.4, 0.75]);
        let d = w1_circle(MeasureRef::Empirical(&x), MeasureRef::Empirical(&x)).unwrap();
        assert_eq!(d, 0.0);
        let grid = TorusGrid::new(1, 64).unwrap();
        let rho = RealField::from_fn(grid, |p| 1.0 + 0.5 * (2.0 * PI * p[0]).sin());
        let d = w1_circle(MeasureRef::Density(&rho), MeasureRef::Density(&rho)).unwrap();
        assert!(d.abs() < 1e-15);
    }

    #[test]
    fn uniform_against_cosine_density_matches_sorted_matching() {
        let grid = TorusGrid::new(1, 1024).unwrap();
        let one = RealField::constant(grid, 1.0);
        let rho = RealField::from_fn(grid, |p| 1.0 + (2.0 * PI * p[0]).cos());
        let exact = w1_circle(MeasureRef::Density(&one), MeasureRef::Density(&rho)).unwrap();

        // Sorted matching of quantile samples on the circle: minimize over
        // cyclic shifts of the pairing.
        let m = 10_000;
        let target_cdf = |x: f64| x + (2.0 * PI * x).sin() / (2.0 * PI);
        let quantile = |u: f64| {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if target_cdf(mid) < u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let a: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        let b: Vec<f64> = a.iter().map(|&u| quantile(u)).collect();
        let circ = |d: f64| {
            let d = d.rem_euclid(1.0);
            d.min(1.0 - d)
        };
        let best = (0..m)
            .step_by(10)
            .map(|s| {
                (0..m)
                    .map(|i| circ(a[i] - b[(i + s) % m]))
                    .sum::<f64>()
                    / m as f64
            })
            .fold(f64::INFINITY, f64::min);
        assert!((exact - best).abs() < 1e-3, "exact {exact} vs oracle {best}");
    }

    #[test]
    fn uniform_against_cosine_density_closed_form() {
        // G(x) = -sin(2πx)/(2π) has median 0, so W₁ = ∫|G| = 1/π².
        let grid = TorusGrid::new(1, 2048).unwrap();
        let one = RealField::constant(grid, 1.0);
        let rho = RealField::from_fn(grid, |p| 1.0 + (2.0 * PI * p[0]).cos());
        let d = w1_circle(MeasureRef::Density(&one), MeasureRef::Density(&rho)).unwrap();
        assert!((d - 1.0 / (PI * PI)).abs() < 1e-6);
    }

    #[test]
    fn empirical_against_uniform_by_quadrature() {
        let mut rng = Lcg(17);
        let pts: Vec<f64> = (0..7).map(|_| rng.next_f64()).collect();
        let x = config(&pts);
        let grid = TorusGrid::new(1, 8).unwrap();
        let one = RealField::constant(grid, 1.0);
        let diff = CdfDifference::new(MeasureRef::Empirical(&x), MeasureRef::Density(&one)).unwrap();
        let g = |t: f64| pts.iter().filter(|p| **p <= t).count() as f64 / 7.0 - t;
        // Brute-force minimization over c of a quadrature of |G - c|.
        let mut cuts = pts.clone();
        cuts.extend([0.0, 1.0]);
        cuts.sort_by(f64::total_cmp);
        let l1 = |c: f64| {
            cuts.windows(2)
                .map(|w| adaptive_simpson(&|t| (g(t) - c).abs(), w[0] + 1e-15, w[1] - 1e-15, 1e-13))
                .sum::<f64>()
        };
        let best = (0..=2000)
            .map(|i| l1(-1.0 + i as f64 / 1000.0))
            .fold(f64::INFINITY, f64::min);
        assert!(diff.w1() <= best + 1e-9);
        assert!(best - diff.w1() < 2e-3);
        assert!((diff.shifted_l1(diff.median()) - diff.w1()).abs() < 1e-15);
    }

    #[test]
    fn centered_l2_of_sine_difference() {
        let grid = TorusGrid::new(1, 512).unwrap();
        let one = RealField::constant(grid, 1.0);
        let rho = RealField::from_fn(grid, |p| 1.0 + 0.1 * (2.0 * PI * p[0]).cos());
        let diff = CdfDifference::new(MeasureRef::Density(&rho), MeasureRef::Density(&one)).unwrap();
        let expected = 0.1 / (2.0 * PI * 2f64.sqrt());
        // Linear interpolation of the density costs O(h²) relative accuracy.
        assert!((diff.centered_l2() - expected).abs() < 2e-5 * expected);
    }

    #[test]
    fn translation_invariance() {
        let mut rng = Lcg(3);
        let a: Vec<f64> = (0..12).map(|_| rng.next_f64()).collect();
        let b: Vec<f64> = (0..12).map(|_| rng.next_f64()).collect();
        let d0 = w1_circle(
            MeasureRef::Empirical(&config(&a)),
            MeasureRef::Empirical(&config(&b)),
        )
        .unwrap();
        let shift = |v: &[f64]| ParticleConfig::wrapped(v.iter().map(|x| x + 0.3137)).unwrap();
        let d1 = w1_circle(MeasureRef::Empirical(&shift(&a)), MeasureRef::Empirical(&shift(&b)))
            .unwrap();
        assert!((d0 - d1).abs() < 1e-13);
    }
}
