//! Fast spectral evaluation of the space-homogeneous Boltzmann collision
//! operator.
//!
//! The operator is written in a Carleman-like form over pairs of orthogonal
//! vectors, periodized on the velocity box `[-π, π)^d`, and projected onto
//! trigonometric polynomials of degree `N`. For kernels whose reduced form
//! factorizes as `a(|x|) b(|y|)`, the kernel modes split into a short sum of
//! products over a finite set of collision directions, so the projected
//! operator becomes `M^{d-1} + 1` FFT convolutions.
//!
//! Modules:
//!
//! * [`grid`]: box geometry, mode lattice, transforms and padded convolution.
//! * [`kernels`]: collision kernels and the radial transforms `φ`, `ψ`.
//! * [`decomposition`]: the factorized kernel modes and a quadrature oracle.
//! * [`collision`]: fast and direct evaluation of the projected operator.
//! * [`solver`]: Runge-Kutta time stepping and moment diagnostics.
//! * [`reference`]: the BKW exact solution and error norms.
//! * [`io`]: binary field dumps.

pub mod collision;
pub mod decomposition;
mod error;
mod fft;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod quadrature;
pub mod reference;
pub mod solver;

pub use collision::{build_direct_table, eval_direct, eval_fast, DirectKernelTable, TableSource};
pub use decomposition::{beta_oracle_2d, decompose, decompose_2d, decompose_3d, Decomposition, DecompositionOptions};
pub use error::{Error, Result};
pub use grid::{from_fourier, to_fourier, truncated_convolution, DomainConfig, FourierField, Lattice, Mode};
pub use kernels::{phi2_closed, phi3_closed, psi3_quad, KernelModel, RadialFactor, RadialTransform};
pub use reference::{bkw, rel_l1_error, verify_bkw_residual, BkwReference};
pub use solver::{integrate, moments, moments_to_maxwellian, step, IntegratorConfig, MomentSet, Scheme};
