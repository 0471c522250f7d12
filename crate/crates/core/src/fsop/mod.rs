//! Discrete fluid-structure operator on a truncated polar grid.

pub mod banded;
pub mod fields;
pub mod fracpow;
pub mod grid;
pub mod operator;
pub mod resolvent;
pub mod semigroup;
pub mod snapshot;
pub mod spectral;
pub mod state;

pub use grid::{GridConfig, RadialGrid, RigidBodyParams, Stretching};
pub use operator::{assemble_operator, OperatorAssembly, SpaceKind};
pub use state::FlowState;
