//! Periodic grid fields and Fourier calculus on the unit torus.
//!
//! All derivatives, inverse Laplacians and norms are evaluated spectrally.
//! Odd-order derivatives drop the Nyquist mode so that derivatives of real
//! fields stay real.

mod fft;
mod field;

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

pub use field::{ComplexField, RealField, TorusGrid};

/// Relative tolerance on the mean of inputs that must be mean-zero.
pub const MEAN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("unsupported dimension {0}; expected 1 or 2")]
    UnsupportedDimension(usize),
    #[error("points per axis must be a power of two >= 8, got {0}")]
    BadResolution(usize),
    #[error("expected {expected} samples, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("field contains non-finite samples")]
    NonFinite,
    #[error("axis {axis} out of range for a {dim}-d grid")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("input has mean {mean:e}, exceeding tolerance {tolerance:e}")]
    NonZeroMean { mean: f64, tolerance: f64 },
}

fn transform_with(
    grid: &TorusGrid,
    values: &[Complex64],
    multiplier: impl Fn(usize) -> Complex64,
) -> Vec<Complex64> {
    let mut data = values.to_vec();
    fft::forward(grid, &mut data);
    for (idx, z) in data.iter_mut().enumerate() {
        *z *= multiplier(idx);
    }
    fft::inverse(grid, &mut data);
    data
}

fn derivative_symbol(grid: &TorusGrid, axis: usize) -> impl Fn(usize) -> Complex64 + '_ {
    move |idx| {
        let (k, nyquist) = grid.mode(idx);
        if nyquist[axis] {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 2.0 * PI * k[axis] as f64)
        }
    }
}

fn check_axis(grid: &TorusGrid, axis: usize) -> Result<(), GridError> {
    if axis >= grid.dim() {
        return Err(GridError::AxisOutOfRange {
            axis,
            dim: grid.dim(),
        });
    }
    Ok(())
}

/// Fields that support spectral differentiation and torus integration.
pub trait SpectralField: Sized {
    type Scalar;

    /// Exact derivative of the trigonometric interpolant along `axis`.
    fn derivative(&self, axis: usize) -> Result<Self, GridError>;

    /// `∫_{T^d} f`, i.e. the sample mean (unit volume).
    fn integrate(&self) -> Self::Scalar;

    /// `||f||_{L^2}`.
    fn l2_norm(&self) -> f64;
}

impl SpectralField for RealField {
    type Scalar = f64;

    fn derivative(&self, axis: usize) -> Result<Self, GridError> {
        check_axis(self.grid(), axis)?;
        let out = transform_with(
            self.grid(),
            self.to_complex().values(),
            derivative_symbol(self.grid(), axis),
        );
        Ok(RealField::from_raw(
            *self.grid(),
            out.into_iter().map(|z| z.re).collect(),
        ))
    }

    fn integrate(&self) -> f64 {
        self.values().iter().sum::<f64>() / self.grid().len() as f64
    }

    fn l2_norm(&self) -> f64 {
        (self.values().iter().map(|v| v * v).sum::<f64>() / self.grid().len() as f64).sqrt()
    }
}

impl SpectralField for ComplexField {
    type Scalar = Complex64;

    fn derivative(&self, axis: usize) -> Result<Self, GridError> {
        check_axis(self.grid(), axis)?;
        let out = transform_with(
            self.grid(),
            self.values(),
            derivative_symbol(self.grid(), axis),
        );
        Ok(ComplexField::from_raw(*self.grid(), out))
    }

    fn integrate(&self) -> Complex64 {
        self.values().iter().sum::<Complex64>() / self.grid().len() as f64
    }

    fn l2_norm(&self) -> f64 {
        (self.values().iter().map(|z| z.norm_sqr()).sum::<f64>() / self.grid().len() as f64)
            .sqrt()
    }
}

pub fn spectral_derivative<F: SpectralField>(f: &F, axis: usize) -> Result<F, GridError> {
    f.derivative(axis)
}

pub fn integrate<F: SpectralField>(f: &F) -> F::Scalar {
    f.integrate()
}

fn check_mean_zero(f: &RealField) -> Result<(), GridError> {
    let mean = f.integrate();
    let tolerance = MEAN_TOLERANCE * f.l2_norm();
    if mean.abs() > tolerance {
        return Err(GridError::NonZeroMean { mean, tolerance });
    }
    Ok(())
}

/// Solves `-Δg = f` for the unique mean-zero `g`.
pub fn inverse_laplacian_zero_mean(f: &RealField) -> Result<RealField, GridError> {
    check_mean_zero(f)?;
    let grid = *f.grid();
    let out = transform_with(&grid, f.to_complex().values(), |idx| {
        if idx == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0 / grid.symbol_laplacian(idx), 0.0)
        }
    });
    Ok(RealField::from_raw(
        grid,
        out.into_iter().map(|z| z.re).collect(),
    ))
}

/// Homogeneous `Ḣ^{-1}` norm of a mean-zero field.
pub fn h_minus1_norm(f: &RealField) -> Result<f64, GridError> {
    check_mean_zero(f)?;
    let coeffs = fourier_coefficients(f);
    let grid = f.grid();
    Ok(coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(idx, c)| c.norm_sqr() / grid.symbol_laplacian(idx))
        .sum::<f64>()
        .sqrt())
}

/// Normalized Fourier coefficients `c_k = N^{-d} Σ_j f_j e^{-2πi k·x_j}`, in
/// FFT slot order, so that `f = Σ_k c_k e^{2πi k·x}`.
pub fn fourier_coefficients(f: &RealField) -> Vec<Complex64> {
    let mut data = f.to_complex().values().to_vec();
    fft::forward(f.grid(), &mut data);
    let scale = 1.0 / f.grid().len() as f64;
    data.iter_mut().for_each(|z| *z *= scale);
    data
}

pub fn complex_fourier_coefficients(f: &ComplexField) -> Vec<Complex64> {
    let mut data = f.values().to_vec();
    fft::forward(f.grid(), &mut data);
    let scale = 1.0 / f.grid().len() as f64;
    data.iter_mut().for_each(|z| *z *= scale);
    data
}

/// Inverse of [`complex_fourier_coefficients`].
pub fn from_fourier_coefficients(grid: TorusGrid, coeffs: &[Complex64]) -> ComplexField {
    let mut data = coeffs.to_vec();
    fft::synthesize(&grid, &mut data);
    ComplexField::from_raw(grid, data)
}

/// Real part of the field synthesized from normalized coefficients.
pub fn real_from_fourier_coefficients(grid: TorusGrid, coeffs: &[Complex64]) -> RealField {
    from_fourier_coefficients(grid, coeffs).re()
}

/// Applies a Fourier multiplier `m(k)`, where `k` is the integer
/// wavevector of each mode.
pub fn apply_multiplier(
    f: &ComplexField,
    multiplier: impl Fn([i64; 2]) -> Complex64,
) -> ComplexField {
    let grid = *f.grid();
    let out = transform_with(&grid, f.values(), |idx| multiplier(grid.mode(idx).0));
    ComplexField::from_raw(grid, out)
}

pub fn laplacian(f: &RealField) -> RealField {
    let grid = *f.grid();
    let out = transform_with(&grid, f.to_complex().values(), |idx| {
        Complex64::new(-grid.symbol_laplacian(idx), 0.0)
    });
    RealField::from_raw(grid, out.into_iter().map(|z| z.re).collect())
}

pub fn gradient(f: &RealField) -> Vec<RealField> {
    (0..f.grid().dim())
        .map(|axis| f.derivative(axis).expect("axis within grid dimension"))
        .collect()
}

pub fn complex_gradient(f: &ComplexField) -> Vec<ComplexField> {
    (0..f.grid().dim())
        .map(|axis| f.derivative(axis).expect("axis within grid dimension"))
        .collect()
}

/// `∫|∇f|^2`, evaluated on the Fourier side.
pub fn dirichlet_energy(f: &RealField) -> f64 {
    dirichlet_energy_from_coefficients(f.grid(), &fourier_coefficients(f))
}

pub fn dirichlet_energy_from_coefficients(grid: &TorusGrid, coeffs: &[Complex64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| grid.symbol_laplacian(idx) * c.norm_sqr())
        .sum()
}

pub fn complex_dirichlet_energy(f: &ComplexField) -> f64 {
    let grid = f.grid();
    complex_fourier_coefficients(f)
        .iter()
        .enumerate()
        .map(|(idx, c)| grid.symbol_laplacian(idx) * c.norm_sqr())
        .sum()
}

pub fn l1_norm(f: &RealField) -> f64 {
    f.values().iter().map(|v| v.abs()).sum::<f64>() / f.grid().len() as f64
}

/// Zeroes every mode with some `|k_axis| > n/3` (2/3 rule).
pub fn dealias(f: &RealField) -> RealField {
    let grid = *f.grid();
    let cutoff = (grid.points_per_axis() / 3) as i64;
    let out = transform_with(&grid, f.to_complex().values(), |idx| {
        let (k, _) = grid.mode(idx);
        if k[..grid.dim()].iter().any(|ka| ka.abs() > cutoff) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    });
    RealField::from_raw(grid, out.into_iter().map(|z| z.re).collect())
}

/// Real trigonometric interpolant of a 1-D field, evaluable off-grid.
#[derive(Clone, Debug)]
pub struct TrigInterpolant {
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    /// Panics on a 2-D field.
    pub fn new(f: &RealField) -> Self {
        assert_eq!(f.grid().dim(), 1, "trigonometric interpolation is 1-D");
        Self {
            coeffs: fourier_coefficients(f),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.coeffs.len();
        let mut sum = self.coeffs[0].re;
        for k in 1..n / 2 {
            let phase = 2.0 * PI * k as f64 * x;
            let e = Complex64::new(phase.cos(), phase.sin());
            sum += 2.0 * (self.coeffs[k] * e).re;
        }
        // Nyquist term in its real (cosine) form.
        sum + self.coeffs[n / 2].re * (PI * n as f64 * x).cos()
    }
}

#[cfg(test)]
mod tests;
