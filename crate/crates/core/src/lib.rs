//! Nonlocal Dirichlet boundary treatments for 1D nonlocal diffusion.
//!
//! * [`kernel`]: radial profiles, scaling and the lower-bound construction.
//! * [`bc1d`]: continuum operators (adaptive quadrature) for the four
//!   boundary treatments, comparison operator and assumption checks.
//! * [`discrete1d`]: collocation matrices, solves and certification.
//! * [`study`]: manufactured-solution convergence and truncation studies.
//! * [`disk2d`]: truncated-ball geometry around a circular hole.

pub mod bc1d;
pub mod discrete1d;
pub mod disk2d;
pub mod error;
pub mod kernel;
pub mod quad;
pub mod study;

pub use error::{Error, Result};

/// Version string embedded in artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
