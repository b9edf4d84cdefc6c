//! Spectral boundary-layer expansion and steady Navier-Stokes validation for
//! slightly perturbed rigid rotation on the unit disk.
//!
//! The library builds the matched asymptotic expansion of the steady flow
//! driven by the wall velocity `alpha + eta f(theta)`: a Couette base state,
//! a nonlinear boundary layer solved in von Mises variables by contraction,
//! linearized layer and outer corrections order by order, and a composite
//! approximation with exact wall traces and discrete divergence zero.  An
//! independent vorticity-streamfunction Navier-Stokes solver on the same
//! disk provides the validation side: error norms against the composite,
//! interior vorticity flatness, and streamline flux diagnostics.

pub mod cutoff;
pub mod error;
pub mod euler;
pub mod fields;
pub mod linalg;
pub mod prandtl;
pub mod prandtl_linear;
pub mod expansion;
pub mod commands;
pub mod composite;
pub mod config;
pub mod ns;
pub mod report;

pub use error::{Error, Result};

/// 2 pi, the theta period.
pub const TAU: f64 = std::f64::consts::TAU;
