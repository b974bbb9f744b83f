//! Numerical laboratory for the quasi-neutral Schrödinger–Poisson–Boltzmann
//! system, its isothermal Euler limit, and the 1-D empirical-measure
//! functionals used to study the N-particle problem.

pub mod euler_isothermal;
pub mod grid_spectral;
pub mod initial_data;
pub mod modulated_energy;
pub mod nbody_empirical;
pub mod poisson_boltzmann;
pub mod schrodinger;

#[cfg(test)]
mod test_support;

pub use grid_spectral::{ComplexField, GridError, RealField, SpectralField, TorusGrid};
