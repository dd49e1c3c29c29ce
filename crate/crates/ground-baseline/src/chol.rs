//! Small dense Cholesky factorization for the ground IPM's direct normal
//! solves. Cross-checked against an independent factorization in the tests.

use crate::GroundError;

/// In-place lower Cholesky of a symmetric positive definite matrix given in
/// row-major order. Returns the factor L with `A = L L'`.
pub fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, GroundError> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(GroundError::NotPositiveDefinite { pivot: i, value: sum });
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Solves `L L' x = b` by forward/backward substitution.
pub fn solve_cholesky(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= l[i][k] * y[k];
        }
        y[i] = v / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = y[i];
        for k in i + 1..n {
            v -= l[k][i] * x[k];
        }
        x[i] = v / l[i][i];
    }
    x
}
