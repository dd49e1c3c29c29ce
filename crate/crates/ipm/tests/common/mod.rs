//! Shared fixtures: dense-backed QpStandard construction and dense linear
//! algebra helpers used as oracles.

use add_core::AddManager;
use add_linalg::{from_dense_on, interleaved_bits, vec_from_dense_on, MatF, VecF};
use foqp_lang::QpStandard;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn bits_for(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

fn mask(len: usize, padded: usize) -> Vec<f64> {
    (0..padded).map(|i| if i < len { 1.0 } else { 0.0 }).collect()
}

/// Builds a QpStandard from dense data. `q_diag = None` gives an LP;
/// `ineq` marks every active row as a `>=` row (slack-extended).
pub fn qp_from_dense(
    m: &AddManager,
    a: &[Vec<f64>],
    b: &[f64],
    c: &[f64],
    q_diag: Option<&[f64]>,
    ineq: bool,
) -> QpStandard {
    let rows = a.len();
    let cols = a.first().map_or(c.len(), |r| r.len());
    let rb = bits_for(rows);
    let cb = bits_for(cols);
    let padded_rows = 1usize << rb;
    let padded_cols = 1usize << cb;
    let (row_bits, col_bits) = interleaved_bits(m, rb, cb);
    // the compiled convention: index spaces are padded, masks mark the
    // logical part
    let mut a_mat = from_dense_on(m, row_bits.clone(), col_bits.clone(), a).unwrap();
    a_mat.rows = padded_rows;
    a_mat.cols = padded_cols;
    let mut b_vec = vec_from_dense_on(m, &row_bits, b).unwrap();
    b_vec.len = padded_rows;
    let mut c_vec = vec_from_dense_on(m, &col_bits, c).unwrap();
    c_vec.len = padded_cols;
    let q = q_diag.map(|d| {
        // Q's row bits are the column bits of A; only the primed copy is fresh
        let qc = m.add_vars(cb);
        let mut dense = vec![vec![0.0; padded_cols]; padded_cols];
        for (i, &v) in d.iter().enumerate() {
            dense[i][i] = v;
        }
        from_dense_on(m, col_bits.clone(), qc, &dense).unwrap()
    });
    let row_mask = vec_from_dense_on(m, &row_bits, &mask(rows, padded_rows)).unwrap();
    let active = vec_from_dense_on(m, &col_bits, &mask(cols, padded_cols)).unwrap();
    let ineq_mask = if ineq {
        row_mask.clone()
    } else {
        VecF::new(m, m.zero(), row_bits.clone(), padded_rows).unwrap()
    };
    QpStandard {
        a: a_mat,
        b: b_vec,
        c: c_vec,
        q,
        row_mask: row_mask.clone(),
        col_mask: active.clone(),
        active_cols: active,
        ineq_mask,
        num_blocks: 1,
        block_bits: 0,
        row_unit_bits: rb,
        col_width: cb,
    }
}

/// A general (non-diagonal) symmetric Q, for bounds-only fixtures.
pub fn qp_bounds_only_dense(m: &AddManager, q: &[Vec<f64>], c: &[f64]) -> QpStandard {
    let cols = c.len();
    let cb = bits_for(cols);
    let padded = 1usize << cb;
    let (qr, qc) = interleaved_bits(m, cb, cb);
    let mut q_mat: MatF = from_dense_on(m, qr.clone(), qc, q).unwrap();
    q_mat.rows = padded;
    q_mat.cols = padded;
    let mut c_vec = vec_from_dense_on(m, &qr, c).unwrap();
    c_vec.len = padded;
    let active = vec_from_dense_on(m, &qr, &mask(cols, padded)).unwrap();
    // row space collapses to a single masked-off row
    let row_bits = m.add_vars(0);
    let zero_rows = VecF::new(m, m.zero(), row_bits.clone(), 1).unwrap();
    let a = MatF::new(m, m.zero(), row_bits, qr.clone(), 1, padded).unwrap();
    QpStandard {
        a,
        b: zero_rows.clone(),
        c: c_vec,
        q: Some(q_mat),
        row_mask: zero_rows.clone(),
        col_mask: active.clone(),
        active_cols: active,
        ineq_mask: zero_rows,
        num_blocks: 0,
        block_bits: 0,
        row_unit_bits: 0,
        col_width: cb,
    }
}

pub fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Vec<Vec<f64>> {
    (0..r).map(|_| (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Random separable QP with a known strictly feasible primal-dual pair, so
/// the program is bounded and solvable.
pub struct DenseQp {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub q_diag: Vec<f64>,
}

pub fn random_separable_qp(rng: &mut ChaCha8Rng, m_rows: usize, n_cols: usize, lp: bool) -> DenseQp {
    let a = rand_mat(rng, m_rows, n_cols);
    let x0 = rand_vec(rng, n_cols, 0.5, 2.0);
    let b: Vec<f64> = a.iter().map(|row| dot(row, &x0)).collect();
    let q_diag = if lp {
        vec![0.0; n_cols]
    } else {
        rand_vec(rng, n_cols, 0.0, 2.0)
    };
    let y0 = rand_vec(rng, m_rows, -1.0, 1.0);
    let s0 = rand_vec(rng, n_cols, 0.2, 1.5);
    // c = A'y0 + s0 - Q x0 makes (x0, y0, s0) strictly feasible
    let mut c = vec![0.0; n_cols];
    for j in 0..n_cols {
        let mut v = s0[j] - q_diag[j] * x0[j];
        for i in 0..m_rows {
            v += a[i][j] * y0[i];
        }
        c[j] = v;
    }
    DenseQp { a, b, c, q_diag }
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, x)).collect()
}

pub fn mat_t_vec(a: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let cols = a.first().map_or(0, |r| r.len());
    (0..cols).map(|j| a.iter().zip(y).map(|(row, yi)| row[j] * yi).sum()).collect()
}

/// Pads a dense matrix to the given power-of-two shape.
pub fn pad(a: &[Vec<f64>], rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| a.get(r).and_then(|row| row.get(c)).copied().unwrap_or(0.0))
                .collect()
        })
        .collect()
}
