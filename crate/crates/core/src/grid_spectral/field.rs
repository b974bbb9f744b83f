use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::GridError;

/// Uniform periodic grid on the unit torus `[0, 1)^dim`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, points_per_axis: usize) -> Result<Self, GridError> {
        if !(1..=2).contains(&dim) {
            return Err(GridError::UnsupportedDimension(dim));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(GridError::BadResolution(points_per_axis));
        }
        Ok(Self {
            dim,
            n: points_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Total number of nodes, `points_per_axis^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node coordinates along one axis.
    pub fn axis_nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| i as f64 / self.n as f64).collect()
    }

    /// Coordinates of the node with flat (row-major) index `idx`.
    pub fn node(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        match self.dim {
            1 => [idx as f64 * h, 0.0],
            _ => [(idx / self.n) as f64 * h, (idx % self.n) as f64 * h],
        }
    }

    /// Signed integer wavenumber of FFT slot `m` along one axis. The Nyquist
    /// slot maps to `-n/2`.
    pub fn wavenumber(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    pub fn is_nyquist(&self, m: usize) -> bool {
        m == self.n / 2
    }

    /// Integer wavevector of flat spectral index `idx`, plus whether any
    /// component sits on a Nyquist slot.
    pub(crate) fn mode(&self, idx: usize) -> ([i64; 2], [bool; 2]) {
        match self.dim {
            1 => ([self.wavenumber(idx), 0], [self.is_nyquist(idx), false]),
            _ => {
                let (a, b) = (idx / self.n, idx % self.n);
                (
                    [self.wavenumber(a), self.wavenumber(b)],
                    [self.is_nyquist(a), self.is_nyquist(b)],
                )
            }
        }
    }

    /// `|2 pi k|^2` for flat spectral index `idx`.
    pub(crate) fn symbol_laplacian(&self, idx: usize) -> f64 {
        let (k, _) = self.mode(idx);
        let tau = 2.0 * std::f64::consts::PI;
        (0..self.dim).map(|a| (tau * k[a] as f64).powi(2)).sum()
    }
}

/// Real samples on a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl RealField {
    pub fn from_values(grid: TorusGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GridError::NonFinite);
        }
        Ok(Self { grid, values })
    }

    /// Builds a field without validation; callers guarantee the length.
    pub(crate) fn from_raw(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    /// Samples `f` at every node; `f` receives the node coordinates
    /// (`[x, 0]` in 1-D).
    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self { grid, values }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    ///
    /// Panics if the grids differ.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn exp(&self) -> Self {
        self.map(f64::exp)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField::from_raw(
            self.grid,
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }
}

impl Add for &RealField {
    type Output = RealField;
    fn add(self, rhs: &RealField) -> RealField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &RealField {
    type Output = RealField;
    fn sub(self, rhs: &RealField) -> RealField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul for &RealField {
    type Output = RealField;
    fn mul(self, rhs: &RealField) -> RealField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

/// Complex samples on a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: TorusGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn from_values(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GridError::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: TorusGrid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise `|z|^2`.
    pub fn norm_sqr(&self) -> RealField {
        RealField::from_raw(self.grid, self.values.iter().map(|z| z.norm_sqr()).collect())
    }

    pub fn re(&self) -> RealField {
        RealField::from_raw(self.grid, self.values.iter().map(|z| z.re).collect())
    }

    pub fn im(&self) -> RealField {
        RealField::from_raw(self.grid, self.values.iter().map(|z| z.im).collect())
    }
}
