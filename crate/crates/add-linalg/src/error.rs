use add_core::AddError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error(transparent)]
    Add(#[from] AddError),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dim { what: &'static str, expected: usize, got: usize },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("zero diagonal entry: matrix is singular")]
    SingularDiagonal,

    #[error("element function produced a non-finite value from {0}")]
    NonFiniteMap(f64),

    #[error("function depends on variable {0} outside the declared bit set")]
    StrayVariable(usize),

    #[error("malformed dense text at line {line}")]
    BadText { line: usize },
}
