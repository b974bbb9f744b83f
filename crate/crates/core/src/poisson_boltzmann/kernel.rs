use std::f64::consts::PI;

/// Periodic Green function of `-d²/dx²` on the unit circle,
/// `K(x) = (x² - |x|)/2` with `x` wrapped to `[-1/2, 1/2)`, so that
/// `-K'' = δ - 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct GreenKernel1D;

impl GreenKernel1D {
    /// `∫_T K`.
    pub const INTEGRAL: f64 = -1.0 / 12.0;

    pub fn wrap(x: f64) -> f64 {
        let y = (x + 0.5).rem_euclid(1.0) - 0.5;
        // rem_euclid can round up to exactly 1.0.
        if y >= 0.5 {
            y - 1.0
        } else {
            y
        }
    }

    pub fn value(x: f64) -> f64 {
        let y = Self::wrap(x);
        0.5 * (y * y - y.abs())
    }

    /// `K'(x) = x - sign(x)/2` away from the diagonal; zero at `x = 0`.
    pub fn derivative(x: f64) -> f64 {
        let y = Self::wrap(x);
        if y == 0.0 {
            0.0
        } else {
            y - 0.5 * y.signum()
        }
    }

    /// Fourier coefficient `K̂_k`: `1/(2πk)²` for `k ≠ 0`, `∫K` for `k = 0`.
    pub fn fourier(k: i64) -> f64 {
        if k == 0 {
            Self::INTEGRAL
        } else {
            1.0 / (2.0 * PI * k as f64).powi(2)
        }
    }
}
