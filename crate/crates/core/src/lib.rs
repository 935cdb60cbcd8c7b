//! Flux-approximate Euler-Poisson model for semiconductor devices: a
//! finite-volume solver for the viscous system, checks of its a-priori
//! estimates, a short-time Picard iteration, and a relaxation-limit study
//! against drift-diffusion.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod field;
pub mod grid;
pub mod harness;
pub mod io;
pub mod model;
pub mod monitor;
pub mod picard;
pub mod profile;
pub mod relax;
pub mod scenario;
pub mod solver;
pub mod state;

pub use error::{Error, Result};
pub use field::{field_bound, solve_field, ElectricField};
pub use grid::{Boundary, Grid1D};
pub use model::{GasModel, PressureConvention, RiemannBase};
pub use profile::{validate_theorem2, DeviceProfile, HypothesisReport};
pub use solver::{flux, prepare_initial, step, FluxScheme, SolverConfig, SourceVariant, StepReport};
pub use state::HydroState;
