//! Conic programs over Hermitian PSD blocks and an interior-point solver.

mod cholesky;
pub mod hermitian;
mod problem;
mod schur;
mod solver;
mod standard;

pub use hermitian::{coord_count, identity_coords, offdiag_coords, smat, svec};
pub use problem::{Cone, ConicProblem, Row, RowBuilder, RowId, RowKind, Sense, Term, VarId};
pub use solver::{solve, ConicSolution, Diagnostics, SolverOptions, Status};
