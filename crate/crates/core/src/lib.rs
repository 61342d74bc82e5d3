//! Normalized ground states of the fractional nonlinear Schrödinger equation
//! `i u_t + (-Delta)^s u + V u - |u|^(p-1) u = 0` in a radial trap, together with
//! spectral certificates for the linearized operators and a split-step
//! integrator for stability experiments.
//!
//! Grids are periodic boxes `[-L, L)^d` with `d` in `{1, 2}`; all fields on a
//! run share one [`Grid`](domain::Grid).

pub mod domain;
pub mod dynamics;
pub mod error;
pub mod groundstate;
pub mod operators;
pub mod spectral;

pub use error::{Error, Result};
