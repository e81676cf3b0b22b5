//! Pseudo-spectral laboratory for the damped isentropic compressible Euler
//! equations on the periodic box [0,1]^n, n = 1, 2, 3.
//!
//! In symmetrized variables σ = (ρ^θ − 1)/θ, θ = (γ−1)/2, the system reads
//! (σ,U)_t = (A + B_{σ,U})(σ,U) with A the damped acoustic operator and B the
//! quadratic transport part. The crate provides the exact per-mode semigroup
//! of A, a Lawson–RK4 integrator, the moving-frame functionals (L₁, L₂) with
//! the slaved mean coordinate c(t), and the diagnostics that measure decay
//! rates and operator bounds along simulated trajectories.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod frame;
pub mod integrator;
pub mod propagator;
pub mod spectral;

pub use error::{Error, Result};
