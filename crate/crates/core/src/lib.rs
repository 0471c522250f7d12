//! Numerical toolkit for a rigid disk moving in a 2D viscous incompressible
//! fluid, written in the frame attached to the disk (radius 1, viscosity 1).
//!
//! * [`special`]: `K_0`, `K_1` and derivatives.
//! * [`oseen`]: the Lamb-Oseen vortex, its pressure and the residual torque.
//! * [`gn`]: sharp Gagliardo-Nirenberg constants and an empirical harness.
//! * [`fsop`]: the discrete fluid-structure operator, projector, semigroup,
//!   resolvents and fractional powers on a truncated polar grid.
//! * [`solver`]: nonlinear and Oseen-perturbed time stepping, Duhamel iteration.
//! * [`decayfit`]: log-log decay fits with trust windows.
//! * [`audit`]: named experiments with their configuration and gate checks.

pub mod audit;
pub mod decayfit;
pub mod error;
pub mod fsop;
pub mod gn;
pub mod oseen;
pub mod quad;
pub mod solver;
pub mod special;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
