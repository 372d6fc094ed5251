//! Numerical laboratory for discounted, possibly degenerate, viscous
//! Hamilton-Jacobi equations on the flat torus in one and two dimensions.
//!
//! The pipeline: a monotone upwind scheme solved by semismooth Newton
//! ([`solver`]), its transposed linearization and the resulting probability
//! densities ([`adjoint`]), the discrete measures built from them
//! ([`measures`]), and mollification diagnostics for subsolutions
//! ([`commutation`]). [`experiment`] drives all of it from a TOML config.

pub mod adjoint;
pub mod commutation;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod grid;
pub mod hamiltonian;
pub mod instances;
pub mod linalg;
pub mod measures;
pub mod solver;

pub use error::{HjError, Result};
