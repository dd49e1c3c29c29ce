//! Matrix and vector algebra over algebraic decision diagrams.
//!
//! A real vector of length `2^m` is the function mapping its `m` index bits
//! to entries; a `2^m x 2^n` matrix is a function of interleaved row and
//! column index bits `(r_0, c_0, r_1, c_1, ...)`, with bit 0 most
//! significant. Matrix-vector products, termwise operations, reductions and
//! norms are all recursive descents over the diagrams, memoized per call.
//!
//! Non-power-of-two dimensions are zero-padded: the logical dimensions live
//! in [`VecF`]/[`MatF`] metadata and padded entries are exactly zero by
//! construction, so sums and norms need no masking.

mod error;
mod mat;
mod types;
mod vec;

pub use error::LinalgError;
pub use mat::{
    from_dense, from_dense_on, identity, identity_on, mat_diagonal, matvec, matvec_t, row_extract,
    to_dense, transpose, walsh, walsh_on,
};
pub use types::{interleaved_bits, DiagF, MatF, VecF};
pub use vec::{
    basis_vec, constant_vec, constant_vec_on, diag_apply, diag_reciprocal, dot, element_sum,
    map_elements,
    map_terminals, max_element, min_element, norm2, norm2_sq, scalar_mul, to_dense_vec, vec_add,
    vec_from_dense, vec_from_dense_on, vec_hadamard, vec_reciprocal, vec_sub,
};

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense text exchange format: row-major, one row per line, entries
/// whitespace-separated. Used by oracles and the ground baseline.
pub mod dense_io {
    use super::LinalgError;

    pub fn write_matrix(rows: &[Vec<f64>]) -> String {
        let mut out = String::new();
        for row in rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn read_matrix(text: &str) -> Result<Vec<Vec<f64>>, LinalgError> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> = line.split_whitespace().map(|t| t.parse()).collect();
            match row {
                Ok(r) => rows.push(r),
                Err(_) => {
                    return Err(LinalgError::BadText { line: i + 1 });
                }
            }
        }
        Ok(rows)
    }
}
