//! A numerical laboratory for stochastic reaction–diffusion equations on an
//! interval with Dirichlet boundary conditions.
//!
//! The crate simulates
//!
//! ```text
//! du = (ν Δu + f(u)) dt + σ(u) dW(x, t),   u = 0 on ∂D,
//! ```
//!
//! where `W` is a Wiener random field with spatial covariance `q(x, y)`, and
//! provides the tools needed to test positivity, finite-time blow-up and
//! global existence statements against simulation:
//!
//! * [`grid`]: the spatial grid, discrete operators, norms and the smooth
//!   negative-part functionals `k_ε` and `β_ε`.
//! * [`spectral`]: the principal Dirichlet eigenpair `(λ₁, φ)` with `∫φ = 1`.
//! * [`noise`]: covariance kernels, dense factorization and increment sampling.
//! * [`dynamics`]: drift/diffusion families, time stepping and path simulation.
//! * [`comparison`]: criterion checkers, comparison ODEs and blow-up time bounds.
//! * [`montecarlo`]: reproducible path ensembles and moment statistics.

pub mod comparison;
pub mod dynamics;
mod error;
pub mod grid;
pub mod montecarlo;
pub mod noise;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Domain1D, Field};
