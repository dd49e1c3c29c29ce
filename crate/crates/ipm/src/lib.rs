//! Matrix-free primal-dual barrier interior point method.
//!
//! The outer loop is generic over an [`IpmBackend`]: the symbolic backend
//! ([`symbolic::SymProblem`]) runs every linear-algebra step on algebraic
//! decision diagrams, a dense/sparse backend (see the ground-baseline
//! crate) runs the identical loop on conventional matrices. Inner systems
//! are solved by conjugate gradients with optional partial-Cholesky
//! preconditioning and primal/dual regularization.

mod backend;
mod cg;
mod normal;
mod options;
mod precond;
pub mod solver;
pub mod symbolic;

pub use backend::IpmBackend;
pub use cg::{cg_solve, CgStats};
pub use normal::{NormalOperator, OperatorKind};
pub use options::{
    InnerSolve, IpmError, IterRecord, RepStats, SolveOptions, SolveReport, Structure,
};
pub use precond::Preconditioner;
pub use solver::{
    build_normal_operator, detect_structure, ipm_solve, ipm_solve_observed, residuals,
    step_length, Directions, IpmState, IterObserver, NoObserver, Residuals,
};
