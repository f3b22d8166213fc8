//! Projective simulability of POVMs.
//!
//! Operators and POVMs, explicit constructions, a conic interior-point
//! solver, and the simulability and search routines built on top of it.

pub mod constructions;
pub mod error;
pub mod operator;
pub mod povm;
pub mod search;
pub mod sdp;
pub mod simulability;
pub mod tolerance;

pub use error::{Error, Result};
pub use operator::{Operator, StateVector, UnitarySet, C64};
pub use povm::{NoiseModel, Povm, ProjectiveMeasurement, RankVector, SimulationEntry, SimulationModel};
pub use tolerance::Tolerances;
