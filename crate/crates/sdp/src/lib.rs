//! A self-contained primal-dual interior-point solver for small dense
//! semidefinite programs with block-diagonal structure.
//!
//! Problems are stated in the standard primal/dual form described in
//! [`problem`]. The Schur complement is assembled per block from distinct
//! constraint slices and factored with a block-sparse Cholesky whose tile
//! pattern follows from which constraints share blocks, so programs whose
//! constraints couple in an arrow pattern stay cheap.

pub mod error;
pub mod problem;
mod schur;
pub mod solver;

pub use error::SdpError;
pub use problem::{inner, Constraint, SdpProblem, SymSparse};
pub use solver::{solve, trace_csv, IterationRecord, SdpSolution, SdpStatus, SolverOptions};
