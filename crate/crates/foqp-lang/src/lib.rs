//! First-order logical quadratic programs: a formula AST, a line-oriented
//! modeling grammar, finite-domain propositionalization, and two routes to
//! the standard form `min c'x + 1/2 x'Qx  s.t.  Ax = b, x >= 0`:
//!
//! - [`compile`]: direct compilation of every term into ADDs, without
//!   grounding;
//! - [`ground`]: explicit enumeration into dense matrices.
//!
//! For every program the two routes produce identical entries, which is the
//! correctness contract the test suite pins down (compiled diagrams are
//! handle-identical to `from_dense` of the ground form).

mod ast;
mod compile;
mod generator;
mod ground;
mod parse;
mod prop;

pub use ast::{
    CoeffExpr, ConstraintBlock, Formula, Foqp, LinearTerm, QuadTerm, Sense, Term, VarDecl,
};
pub use compile::{compile, QpStandard};
pub use generator::{random_program, GeneratorConfig};
pub use ground::{ground, ground_with_limit, GroundForm};
pub use parse::parse;
pub use prop::{eval_coeff, eval_formula, propositionalize, Database};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FoqpError {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("unknown vector `{0}`")]
    UnknownVector(String),

    #[error("unknown bit reference `{0}`")]
    UnknownBit(String),

    #[error("vector `{name}` has width {got}, expected {expected}")]
    WidthMismatch { name: String, expected: usize, got: usize },

    #[error("unresolved atom `{0}`: propositionalize the program first")]
    UnresolvedAtom(String),

    #[error("quantifier over `{0}` has no declared domain")]
    UnboundedQuantifier(String),

    #[error("program has quantifiers or atoms: propositionalize it first")]
    NotPropositional,

    #[error("program declares no objective or constraint terms")]
    EmptyProgram,

    #[error("grounding needs {bits} bits, over the {limit}-bit safety budget")]
    BitBudget { bits: usize, limit: usize },

    #[error(transparent)]
    Add(#[from] add_core::AddError),

    #[error(transparent)]
    Linalg(#[from] add_linalg::LinalgError),
}

pub(crate) fn bits_for(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}
