//! Shared numerical kernels: finite-difference stencils on arbitrary grids,
//! banded complex LU, cumulative quadrature, local polynomial interpolation,
//! and a right-preconditioned GMRES.

pub mod banded;
pub mod fd;
pub mod gmres;
pub mod interp;
pub mod quad;

pub use banded::BandedLu;
pub use fd::{fornberg_weights, StencilSet};
pub use gmres::{gmres, GmresOutcome};
