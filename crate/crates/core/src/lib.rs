//! Stationary quantum BGK solver for bosons and fermions in the slab
//! `x ∈ [0, 1]` with inflow boundary data.

pub mod boundary;
pub mod config;
pub mod driver;
pub mod equilibrium;
pub mod error;
pub mod fixed_point;
pub mod grid;
pub mod quadrature;
pub mod stats;
pub mod theorem;
pub mod transport;

pub use boundary::BoundaryData;
pub use config::{parse_config, SolverConfig};
pub use equilibrium::{EquilibriumParams, MomentTriple, Regime};
pub use error::{Error, Result};
pub use fixed_point::{picard_solve, SolutionReport, SolverOptions};
pub use grid::{DistributionField, GridSpec, PhaseGrid};
pub use stats::{QuadratureSpec, Statistics};
pub use theorem::TheoremConstants;
