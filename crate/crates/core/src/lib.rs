//! Numerical laboratory for the Benjamin–Bona–Mahony equation in its nonlocal
//! form `u_t = -phi(D)(u + u^2/2)`, with a Camassa–Holm solver, a coupled
//! BBM system, conserved-quantity and regularity diagnostics, and
//! unique-continuation checks and constructions.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod io;
pub mod operators;
pub mod quad;
pub mod roots;
pub mod unique_continuation;

pub use error::{Error, Result};
pub use grid::{Domain, Grid, GridFunction, Spectrum};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
