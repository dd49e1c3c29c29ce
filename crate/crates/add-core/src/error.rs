use thiserror::Error;

/// Errors raised by ADD construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AddError {
    #[error("terminal value must be finite, got {0}")]
    NonFiniteTerminal(f64),

    #[error("variable {index} is not registered with this manager ({count} variables)")]
    UnregisteredVariable { index: usize, count: usize },

    #[error("handle {0} does not belong to this manager")]
    InvalidHandle(u32),

    #[error("operation {op} produced a non-finite value from {lhs} and {rhs}")]
    NonFiniteResult { op: &'static str, lhs: f64, rhs: f64 },

    #[error("assignment does not cover variable {index}")]
    IncompleteAssignment { index: usize },

    #[error("malformed dump at line {line}: {msg}")]
    BadDump { line: usize, msg: String },
}
