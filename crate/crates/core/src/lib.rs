//! High-order solvers for one-dimensional local and non-local scalar
//! conservation laws
//!
//! ```text
//! rho_t + (f(rho) V(rho * omega_eta))_x = 0
//! ```
//!
//! Two spatial discretizations are provided: Runge-Kutta discontinuous
//! Galerkin ([`dg`]) with generalized slope limiters, and finite volume WENO
//! ([`fvweno`]). The non-local velocity argument is evaluated through
//! precomputed kernel moment tables ([`convolution`]). Both are advanced in
//! time with the SSP third-order Runge-Kutta scheme ([`time`]).
//!
//! The [`cli`] module drives complete experiments (single runs, convergence
//! studies and the bundled test problems) and writes CSV output.

pub mod analysis;
pub mod basis;
pub mod cli;
pub mod convolution;
pub mod dg;
pub mod error;
pub mod exec;
pub mod fvweno;
pub mod mesh;
pub mod models;
pub mod solver;
pub mod time;

pub use error::{Error, Result};
pub use exec::Execution;
