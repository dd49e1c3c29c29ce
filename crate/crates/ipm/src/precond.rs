//! Partial pivoted Cholesky preconditioner for the normal equations.
//!
//! `k` greedy largest-diagonal pivots of `N = A D A^T + rho I` produce a
//! trapezoidal factor `L` (k columns); the unfactored remainder is
//! approximated by the diagonal of its Schur complement. The preconditioner
//! is `M = L~ blkdiag(I_k, D_S) L~^T` with `L~ = [[L1, 0], [L2, I]]`, and
//! applying `M^{-1}` costs two triangular sweeps over the k columns.
//!
//! Each pivot queries one row of `N` through a basis-vector product, which
//! is the one sanctioned relaxation of the cofactor-only access rule; the
//! factor columns stay vectors of the backend, so CG keeps operating
//! symbolically.

use crate::backend::IpmBackend;
use crate::normal::{NormalOperator, OperatorKind};
use crate::IpmError;

pub struct Preconditioner<B: IpmBackend> {
    pivots: Vec<usize>,
    /// pivot diagonal entries of L1 (lambda_t = L[i_t, t])
    lambda: Vec<f64>,
    /// trapezoidal factor columns, full row-space vectors
    cols: Vec<B::V>,
    /// pivot basis vectors, kept for the back substitution
    basis: Vec<B::V>,
    /// g[t][m] = value of column t at pivot row i_m
    g: Vec<Vec<f64>>,
    /// 1 / diag(Schur remainder) with ones at pivot coordinates
    ds_inv: B::V,
    /// 0/1 mask of non-pivot coordinates
    np_mask: B::V,
    /// pivots requested but abandoned on a non-positive diagonal
    pub stopped_early: bool,
}

impl<B: IpmBackend> Preconditioner<B> {
    /// Runs `k` greedy pivots on the normal operator. `k = 0` yields the
    /// identity preconditioner (CG then matches the plain iteration).
    pub fn build(
        be: &B,
        op: &mut NormalOperator<'_, B>,
        k: usize,
    ) -> Result<Self, IpmError> {
        if !matches!(op.kind, OperatorKind::NormalEquation) {
            return Err(IpmError::UnsupportedStructure(
                "partial Cholesky preconditioning applies to the normal-equation path",
            ));
        }
        let n = be.rows_padded();
        // dense view of diag(N), updated as pivots are eliminated
        let mut diag = be.to_dense_rows(&be.normal_diag(&op.diag)?)?;
        if op.rho_dual != 0.0 {
            for v in diag.iter_mut() {
                *v += op.rho_dual;
            }
        }
        let mut pivots = Vec::new();
        let mut lambda = Vec::new();
        let mut cols: Vec<B::V> = Vec::new();
        let mut dense_cols: Vec<Vec<f64>> = Vec::new();
        let mut is_pivot = vec![false; n];
        let mut stopped_early = false;

        for _ in 0..k.min(n) {
            let mut best = None;
            let mut best_val = 0.0;
            for (i, &d) in diag.iter().enumerate() {
                if !is_pivot[i] && d > best_val {
                    best_val = d;
                    best = Some(i);
                }
            }
            // non-positive pivot: stop with what we have
            let Some(i) = best else {
                stopped_early = true;
                break;
            };
            if best_val <= f64::EPSILON {
                stopped_early = true;
                break;
            }
            let e = be.basis_row(i)?;
            let mut col = op.apply(&e)?;
            for (m, lcol) in cols.iter().enumerate() {
                let lmi = dense_cols[m][i];
                if lmi != 0.0 {
                    col = be.sub(&col, &be.scale(lmi, lcol)?)?;
                }
            }
            let lam = best_val.sqrt();
            let col = be.scale(1.0 / lam, &col)?;
            let dcol = be.to_dense_rows(&col)?;
            for (j, d) in diag.iter_mut().enumerate() {
                *d -= dcol[j] * dcol[j];
            }
            is_pivot[i] = true;
            pivots.push(i);
            lambda.push(lam);
            cols.push(col);
            dense_cols.push(dcol);
        }

        let kk = pivots.len();
        let mut g = vec![vec![0.0; kk]; kk];
        for t in 0..kk {
            for m in 0..kk {
                g[t][m] = dense_cols[t][pivots[m]];
            }
        }
        // Schur-diagonal reciprocal, 1 at pivots; floor tiny entries so the
        // middle solve stays positive definite.
        let ds: Vec<f64> = (0..n)
            .map(|i| if is_pivot[i] { 1.0 } else { 1.0 / diag[i].max(1e-12) })
            .collect();
        let np: Vec<f64> = (0..n).map(|i| if is_pivot[i] { 0.0 } else { 1.0 }).collect();
        let ds_inv = be.vec_from_dense_rows(&ds)?;
        let np_mask = be.vec_from_dense_rows(&np)?;
        let basis = pivots
            .iter()
            .map(|&i| be.basis_row(i))
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Preconditioner { pivots, lambda, cols, basis, g, ds_inv, np_mask, stopped_early })
    }

    pub fn pivot_count(&self) -> usize {
        self.pivots.len()
    }

    /// `z = M^{-1} r`.
    pub fn apply(&self, be: &B, r: &B::V) -> Result<B::V, IpmError> {
        let k = self.pivots.len();
        if k == 0 {
            return Ok(r.clone());
        }
        // forward: L1 sigma = r at pivot coordinates
        let mut sigma = vec![0.0; k];
        for t in 0..k {
            let mut v = be.entry_row(r, self.pivots[t])?;
            for m in 0..t {
                v -= self.g[m][t] * sigma[m];
            }
            sigma[t] = v / self.lambda[t];
        }
        // w = (r - L sigma) restricted to non-pivots
        let mut w = r.clone();
        for t in 0..k {
            if sigma[t] != 0.0 {
                w = be.sub(&w, &be.scale(sigma[t], &self.cols[t])?)?;
            }
        }
        let w = be.hadamard(&w, &self.np_mask)?;
        // middle: divide by the Schur diagonal
        let y2 = be.hadamard(&w, &self.ds_inv)?;
        // backward: L1' z1 = sigma - L2' y2
        let mut rho = vec![0.0; k];
        for t in 0..k {
            rho[t] = be.dot(&self.cols[t], &y2)?;
        }
        let mut z1 = vec![0.0; k];
        for t in (0..k).rev() {
            let mut v = sigma[t] - rho[t];
            for m in t + 1..k {
                v -= self.g[t][m] * z1[m];
            }
            z1[t] = v / self.lambda[t];
        }
        let mut z = y2;
        for t in 0..k {
            if z1[t] != 0.0 {
                z = be.add(&z, &be.scale(z1[t], &self.basis[t])?)?;
            }
        }
        Ok(z)
    }

    pub(crate) fn live_vectors_mut(&mut self) -> Vec<&mut B::V> {
        let mut v: Vec<&mut B::V> = Vec::with_capacity(2 * self.cols.len() + 2);
        v.extend(self.cols.iter_mut());
        v.extend(self.basis.iter_mut());
        v.push(&mut self.ds_inv);
        v.push(&mut self.np_mask);
        v
    }
}

