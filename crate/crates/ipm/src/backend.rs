use crate::options::RepStats;
use crate::IpmError;

/// Linear-algebra backend the barrier method runs on.
///
/// The solver touches the problem data exclusively through this trait:
/// matrix-vector products with `A`, `A^T` and `Q`, pointwise vector
/// arithmetic, reductions, masks, and (for the partial-Cholesky
/// preconditioner) basis-vector row queries. The symbolic backend routes
/// everything to ADD operations; the ground backend to sparse/dense
/// arithmetic. One outer-loop implementation serves both, so timing
/// comparisons isolate representation effects.
///
/// Vectors of the column space include the slack coordinates of inequality
/// rows; `A` acts as the extended matrix `[A | -I_ineq]`.
pub trait IpmBackend {
    type V: Clone;

    // ---- problem data ----
    fn b(&self) -> Result<Self::V, IpmError>;
    fn c(&self) -> Result<Self::V, IpmError>;
    fn a_apply(&self, x: &Self::V) -> Result<Self::V, IpmError>;
    fn at_apply(&self, y: &Self::V) -> Result<Self::V, IpmError>;
    fn q_apply(&self, x: &Self::V) -> Result<Self::V, IpmError>;
    /// Diagonal of `Q` when it is diagonal (the zero vector for LPs),
    /// `None` when `Q` has off-diagonal entries.
    fn q_diag(&self) -> Result<Option<Self::V>, IpmError>;
    /// Diagonal of `A` when the program is box-constrained, else `None`.
    fn a_diag(&self) -> Result<Option<Self::V>, IpmError>;
    /// Whether any equality row is active.
    fn has_rows(&self) -> bool;
    /// Complementarity dimension: active columns plus inequality slacks.
    fn n_active(&self) -> f64;
    /// Padded row-space dimension (for preconditioner pivot scans).
    fn rows_padded(&self) -> usize;

    // ---- masks ----
    fn mask_rows(&self, v: &Self::V) -> Result<Self::V, IpmError>;
    fn mask_cols(&self, v: &Self::V) -> Result<Self::V, IpmError>;

    // ---- constructors ----
    fn ones_cols(&self) -> Result<Self::V, IpmError>;
    fn zeros_cols(&self) -> Result<Self::V, IpmError>;
    fn zeros_rows(&self) -> Result<Self::V, IpmError>;
    fn basis_row(&self, i: usize) -> Result<Self::V, IpmError>;
    fn vec_from_dense_rows(&self, vals: &[f64]) -> Result<Self::V, IpmError>;

    // ---- vector algebra ----
    fn add(&self, u: &Self::V, v: &Self::V) -> Result<Self::V, IpmError>;
    fn sub(&self, u: &Self::V, v: &Self::V) -> Result<Self::V, IpmError>;
    fn hadamard(&self, u: &Self::V, v: &Self::V) -> Result<Self::V, IpmError>;
    fn scale(&self, k: f64, v: &Self::V) -> Result<Self::V, IpmError>;
    fn map(&self, v: &Self::V, f: &dyn Fn(f64) -> f64) -> Result<Self::V, IpmError>;
    fn dot(&self, u: &Self::V, v: &Self::V) -> Result<f64, IpmError>;
    fn sum(&self, v: &Self::V) -> Result<f64, IpmError>;
    fn min_entry(&self, v: &Self::V) -> Result<f64, IpmError>;
    fn max_abs_entry(&self, v: &Self::V) -> Result<f64, IpmError>;

    fn norm2(&self, v: &Self::V) -> Result<f64, IpmError> {
        Ok(self.dot(v, v)?.sqrt())
    }

    /// Row diagonal of the normal matrix `A diag(d) A^T` for a column-space
    /// diagonal `d` (used by the preconditioner).
    fn normal_diag(&self, d: &Self::V) -> Result<Self::V, IpmError>;

    /// Scalar entry of a row-space vector.
    fn entry_row(&self, v: &Self::V, i: usize) -> Result<f64, IpmError>;

    // ---- dense export (reports, oracles, preconditioner internals) ----
    fn to_dense_rows(&self, v: &Self::V) -> Result<Vec<f64>, IpmError>;
    fn to_dense_cols(&self, v: &Self::V) -> Result<Vec<f64>, IpmError>;

    // ---- optional direct inner solve ----
    /// Solves `(A diag(d) A^T + rho I) u = rhs` directly if this backend
    /// has a factorization path (and, unless `force`, considers the system
    /// small enough). `None` falls back to CG.
    fn direct_normal_solve(
        &self,
        _d: &Self::V,
        _rho: f64,
        _rhs: &Self::V,
        _force: bool,
    ) -> Option<Result<Self::V, IpmError>> {
        None
    }

    // ---- memory management ----
    fn configure_memory(&self, _node_limit: usize) {}
    fn should_compact(&self) -> bool {
        false
    }
    /// Compacts internal storage; every live vector the caller holds must be
    /// passed in so its handle can be rewritten.
    fn compact(&self, _live: &mut [&mut Self::V]) -> Result<(), IpmError> {
        Ok(())
    }

    fn rep_stats(&self) -> RepStats {
        RepStats::default()
    }
}
