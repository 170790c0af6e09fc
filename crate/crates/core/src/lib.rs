//! Numerical laboratory for the reduced 2D Maxwell–Lorentz system with a
//! particle spinning at the origin.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] – periodic spectral discretization, unitary transforms, weighted norms;
//! * [`charge`] – neutral radial charges defined by their Fourier profile;
//! * [`soliton`] – stationary rotating solutions and the momentum map;
//! * [`dynamics`] – Strang-split time stepping of the reduced system;
//! * [`laplace`] – boundary values on the imaginary axis and Fourier inversion;
//! * [`free_wave`] – the free wave group, its light-cone kernel, Duhamel and scattering;
//! * [`resolvent`] – 2D Helmholtz kernel near the threshold and at high energy;
//! * [`fit`] – power-law fits and finite-difference smoothness probes;
//! * [`experiments`] – configuration, the canonical experiments and their reports.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bessel;
pub mod charge;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod free_wave;
pub mod grid;
pub mod laplace;
pub mod quadrature;
pub mod resolvent;
pub mod soliton;

pub use error::{Error, Result};

/// The symplectic rotation `J = [[0, 1], [-1, 0]]` applied to a 2-vector.
#[inline]
pub fn rot_j<T: Copy + std::ops::Neg<Output = T>>(v: [T; 2]) -> [T; 2] {
    [v[1], -v[0]]
}
