use add_core::{AddManager, AddNode, AddRef, BinOp, VarId};
use rustc_hash::FxHashMap;

use crate::types::{bits_for, interleaved_bits, MatF, VecF};
use crate::{LinalgError, Result};

/// One step of the matvec descent, in the manager's variable order.
#[derive(Debug, Clone, Copy)]
enum Step {
    /// Branch on a row bit of the matrix: produces an output node.
    Produce(VarId),
    /// Sum over a column bit of the matrix paired with a vector bit.
    Sum(VarId, VarId),
}

/// Merges produce bits and (matrix, vector) sum pairs into descent order.
fn plan(produce: &[VarId], sum_mat: &[VarId], sum_vec: &[VarId]) -> Vec<Step> {
    debug_assert_eq!(sum_mat.len(), sum_vec.len());
    let mut steps = Vec::with_capacity(produce.len() + sum_mat.len());
    let mut pi = 0;
    let mut si = 0;
    while pi < produce.len() || si < sum_mat.len() {
        let take_produce = match (produce.get(pi), sum_mat.get(si)) {
            (Some(p), Some(s)) => p < s,
            (Some(_), None) => true,
            _ => false,
        };
        if take_produce {
            steps.push(Step::Produce(produce[pi]));
            pi += 1;
        } else {
            steps.push(Step::Sum(sum_mat[si], sum_vec[si]));
            si += 1;
        }
    }
    steps
}

/// Cofactor on a variable known to be at or above the node's top.
fn cof(m: &AddManager, f: AddRef, x: VarId) -> (AddRef, AddRef) {
    match m.node(f) {
        AddNode::Internal { var, high, low } if var == x => (high, low),
        _ => (f, f),
    }
}

struct MatVec<'a> {
    m: &'a AddManager,
    steps: Vec<Step>,
    memo: FxHashMap<(AddRef, AddRef, usize), AddRef>,
}

impl MatVec<'_> {
    fn run(&mut self, a: AddRef, v: AddRef, pos: usize) -> Result<AddRef> {
        if a == self.m.zero() || v == self.m.zero() {
            return Ok(self.m.zero());
        }
        if pos == self.steps.len() {
            let (Some(x), Some(y)) = (self.m.terminal_value(a), self.m.terminal_value(v)) else {
                unreachable!("all bits consumed");
            };
            let p = x * y;
            if !p.is_finite() {
                return Err(LinalgError::NonFiniteMap(p));
            }
            return Ok(self.m.mk_terminal(p)?);
        }
        if let Some(&r) = self.memo.get(&(a, v, pos)) {
            return Ok(r);
        }
        let r = match self.steps[pos] {
            Step::Produce(rb) => {
                let (a1, a0) = cof(self.m, a, rb);
                let high = self.run(a1, v, pos + 1)?;
                let low = self.run(a0, v, pos + 1)?;
                self.m.mk_node(rb, high, low)
            }
            Step::Sum(cb, vb) => {
                let (a1, a0) = cof(self.m, a, cb);
                let (v1, v0) = cof(self.m, v, vb);
                let t1 = self.run(a1, v1, pos + 1)?;
                let t0 = self.run(a0, v0, pos + 1)?;
                self.m.apply(BinOp::Add, t1, t0)?
            }
        };
        self.memo.insert((a, v, pos), r);
        Ok(r)
    }
}

/// `u = A v` by recursive block descent: branch on row bits, sum over
/// column bits paired positionally with the vector's bits. The result is a
/// vector over `A`'s row bits.
pub fn matvec(m: &AddManager, a: &MatF, v: &VecF) -> Result<VecF> {
    if a.col_bits.len() != v.bits.len() || a.cols != v.len {
        return Err(LinalgError::Dim { what: "matvec", expected: a.cols, got: v.len });
    }
    let steps = plan(&a.row_bits, &a.col_bits, &v.bits);
    let mut mv = MatVec { m, steps, memo: FxHashMap::default() };
    let fun = mv.run(a.fun, v.fun, 0)?;
    Ok(VecF::raw(fun, a.row_bits.clone(), a.rows))
}

/// `u = A^T v` without materializing a transpose: row bits are summed
/// against the vector and column bits produce output nodes.
pub fn matvec_t(m: &AddManager, a: &MatF, v: &VecF) -> Result<VecF> {
    if a.row_bits.len() != v.bits.len() || a.rows != v.len {
        return Err(LinalgError::Dim { what: "matvec_t", expected: a.rows, got: v.len });
    }
    let steps = plan(&a.col_bits, &a.row_bits, &v.bits);
    let mut mv = MatVec { m, steps, memo: FxHashMap::default() };
    let fun = mv.run(a.fun, v.fun, 0)?;
    Ok(VecF::raw(fun, a.col_bits.clone(), a.cols))
}

/// The unnormalized Walsh matrix `W_n` (2^n x 2^n) on fresh interleaved
/// bits: `W_0 = [1]`, and `W_n` stacks `(W_{n-1}  W_{n-1})` over
/// `(W_{n-1} -W_{n-1})`.
pub fn walsh(m: &AddManager, n: usize) -> Result<MatF> {
    let (rb, cb) = interleaved_bits(m, n, n);
    walsh_on(m, rb, cb)
}

/// Walsh matrix on caller-provided bits: the pointwise product of the
/// per-level factors `1 - 2 r_i c_i`.
pub fn walsh_on(m: &AddManager, row_bits: Vec<VarId>, col_bits: Vec<VarId>) -> Result<MatF> {
    if row_bits.len() != col_bits.len() {
        return Err(LinalgError::Dim {
            what: "walsh_on",
            expected: row_bits.len(),
            got: col_bits.len(),
        });
    }
    let n = row_bits.len();
    let mut fun = m.one();
    for i in (0..n).rev() {
        // 1 - 2 r_i c_i, assembled pointwise so any bit order works
        let r = m.mk_var(row_bits[i])?;
        let c = m.mk_var(col_bits[i])?;
        let rc = m.apply(BinOp::Mul, r, c)?;
        let two_rc = m.apply(BinOp::Mul, m.mk_terminal(2.0)?, rc)?;
        let factor = m.apply(BinOp::Sub, m.one(), two_rc)?;
        fun = m.apply(BinOp::Mul, fun, factor)?;
    }
    Ok(MatF::raw(fun, row_bits, col_bits, 1usize << n, 1usize << n))
}

/// Identity matrix over `nbits` row/column bits (fresh, interleaved).
pub fn identity(m: &AddManager, nbits: usize) -> Result<MatF> {
    let (rb, cb) = interleaved_bits(m, nbits, nbits);
    identity_on(m, rb, cb)
}

pub fn identity_on(m: &AddManager, row_bits: Vec<VarId>, col_bits: Vec<VarId>) -> Result<MatF> {
    if row_bits.len() != col_bits.len() {
        return Err(LinalgError::Dim {
            what: "identity_on",
            expected: row_bits.len(),
            got: col_bits.len(),
        });
    }
    let mut fun = m.one();
    for i in (0..row_bits.len()).rev() {
        // [r_i == c_i] = r c + (1-r)(1-c), assembled pointwise
        let r = m.mk_var(row_bits[i])?;
        let c = m.mk_var(col_bits[i])?;
        let both = m.apply(BinOp::Mul, r, c)?;
        let nr = m.apply(BinOp::Sub, m.one(), r)?;
        let nc = m.apply(BinOp::Sub, m.one(), c)?;
        let neither = m.apply(BinOp::Mul, nr, nc)?;
        let eq = m.apply(BinOp::Add, both, neither)?;
        fun = m.apply(BinOp::Mul, fun, eq)?;
    }
    let n = 1usize << row_bits.len();
    Ok(MatF::raw(fun, row_bits, col_bits, n, n))
}

/// Imports a dense matrix onto fresh interleaved bits, zero-padding each
/// dimension to the next power of two.
pub fn from_dense(m: &AddManager, rows: &[Vec<f64>]) -> Result<MatF> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    let (rb, cb) = interleaved_bits(m, bits_for(nr), bits_for(nc));
    from_dense_on(m, rb, cb, rows)
}

/// Imports a dense matrix onto caller-provided bits.
pub fn from_dense_on(
    m: &AddManager,
    row_bits: Vec<VarId>,
    col_bits: Vec<VarId>,
    rows: &[Vec<f64>],
) -> Result<MatF> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    if nr > 1 << row_bits.len() {
        return Err(LinalgError::Dim { what: "from_dense rows", expected: 1 << row_bits.len(), got: nr });
    }
    if nc > 1 << col_bits.len() {
        return Err(LinalgError::Dim { what: "from_dense cols", expected: 1 << col_bits.len(), got: nc });
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != nc {
            return Err(LinalgError::Dim { what: "ragged dense rows", expected: nc, got: rows[i].len() });
        }
    }
    let steps = plan_bits(&row_bits, &col_bits);
    let fun = build_mat(m, &steps, 0, 0, 0, rows)?;
    Ok(MatF::raw(fun, row_bits, col_bits, nr, nc))
}

#[derive(Debug, Clone, Copy)]
enum BitKind {
    Row(VarId, usize),
    Col(VarId, usize),
}

fn plan_bits(row_bits: &[VarId], col_bits: &[VarId]) -> Vec<BitKind> {
    let mut tagged: Vec<BitKind> = row_bits
        .iter()
        .enumerate()
        .map(|(i, &v)| BitKind::Row(v, row_bits.len() - 1 - i))
        .chain(col_bits.iter().enumerate().map(|(i, &v)| BitKind::Col(v, col_bits.len() - 1 - i)))
        .collect();
    tagged.sort_by_key(|k| match *k {
        BitKind::Row(v, _) | BitKind::Col(v, _) => v,
    });
    tagged
}

fn build_mat(
    m: &AddManager,
    steps: &[BitKind],
    pos: usize,
    r: usize,
    c: usize,
    rows: &[Vec<f64>],
) -> Result<AddRef> {
    if pos == steps.len() {
        let v = rows.get(r).and_then(|row| row.get(c)).copied().unwrap_or(0.0);
        return Ok(m.mk_terminal(v)?);
    }
    match steps[pos] {
        BitKind::Row(var, shift) => {
            let hi = build_mat(m, steps, pos + 1, r | (1 << shift), c, rows)?;
            let lo = build_mat(m, steps, pos + 1, r, c, rows)?;
            Ok(m.mk_node(var, hi, lo))
        }
        BitKind::Col(var, shift) => {
            let hi = build_mat(m, steps, pos + 1, r, c | (1 << shift), rows)?;
            let lo = build_mat(m, steps, pos + 1, r, c, rows)?;
            Ok(m.mk_node(var, hi, lo))
        }
    }
}

/// Expands to a dense row-major matrix of the logical dimensions.
pub fn to_dense(m: &AddManager, a: &MatF) -> Vec<Vec<f64>> {
    let pr = a.padded_rows();
    let pc = a.padded_cols();
    let mut flat = vec![0.0; pr * pc];
    let steps = plan_bits(&a.row_bits, &a.col_bits);
    fill_mat(m, a.fun, &steps, 0, 0, 0, pc, &mut flat);
    (0..a.rows).map(|r| flat[r * pc..r * pc + a.cols].to_vec()).collect()
}

fn fill_mat(
    m: &AddManager,
    f: AddRef,
    steps: &[BitKind],
    pos: usize,
    r: usize,
    c: usize,
    stride: usize,
    out: &mut [f64],
) {
    if pos == steps.len() {
        if let Some(t) = m.terminal_value(f) {
            out[r * stride + c] = t;
        }
        return;
    }
    // Constant zero subtrees leave the buffer untouched.
    if f == m.zero() {
        return;
    }
    match steps[pos] {
        BitKind::Row(var, shift) => {
            let (hi, lo) = cof(m, f, var);
            fill_mat(m, lo, steps, pos + 1, r, c, stride, out);
            fill_mat(m, hi, steps, pos + 1, r | (1 << shift), c, stride, out);
        }
        BitKind::Col(var, shift) => {
            let (hi, lo) = cof(m, f, var);
            fill_mat(m, lo, steps, pos + 1, r, c, stride, out);
            fill_mat(m, hi, steps, pos + 1, r, c | (1 << shift), stride, out);
        }
    }
}

/// Row `i` of `A` as a vector over the column bits, by cofactoring all row
/// bits on the binary expansion of `i`.
pub fn row_extract(m: &AddManager, a: &MatF, i: usize) -> Result<VecF> {
    if i >= a.rows {
        return Err(LinalgError::IndexOutOfRange { index: i, limit: a.rows });
    }
    let mut fun = a.fun;
    let nb = a.row_bits.len();
    for (b, &var) in a.row_bits.iter().enumerate() {
        let bit = (i >> (nb - 1 - b)) & 1 == 1;
        fun = m.cofactor(fun, var, bit)?;
    }
    Ok(VecF::raw(fun, a.col_bits.clone(), a.cols))
}

/// Transpose of a bit-square matrix, materialized by swapping each
/// (row, column) bit pair in place. The result lives on the same bits with
/// the roles of `row_bits` and `col_bits` exchanged.
pub fn transpose(m: &AddManager, a: &MatF) -> Result<MatF> {
    if a.row_bits.len() != a.col_bits.len() {
        return Err(LinalgError::Dim {
            what: "transpose (bit-square only)",
            expected: a.row_bits.len(),
            got: a.col_bits.len(),
        });
    }
    // the in-place pair swap needs each (row, col) pair to precede the next
    for i in 1..a.row_bits.len() {
        let prev = a.row_bits[i - 1].max(a.col_bits[i - 1]);
        let next = a.row_bits[i].min(a.col_bits[i]);
        if prev >= next {
            return Err(LinalgError::Dim {
                what: "transpose (interleaved pairs only)",
                expected: i,
                got: i - 1,
            });
        }
    }
    let mut memo = FxHashMap::default();
    let fun = transpose_rec(m, a.fun, &a.row_bits, &a.col_bits, 0, &mut memo)?;
    Ok(MatF::raw(fun, a.row_bits.clone(), a.col_bits.clone(), a.cols, a.rows))
}

fn transpose_rec(
    m: &AddManager,
    f: AddRef,
    rb: &[VarId],
    cb: &[VarId],
    pos: usize,
    memo: &mut FxHashMap<(AddRef, usize), AddRef>,
) -> Result<AddRef> {
    if pos == rb.len() || m.is_terminal(f) {
        // Constant blocks are symmetric.
        return Ok(f);
    }
    if let Some(&r) = memo.get(&(f, pos)) {
        return Ok(r);
    }
    // general cofactors: the pair's bits need not be adjacent in the order
    let f1 = m.cofactor(f, rb[pos], true)?;
    let f0 = m.cofactor(f, rb[pos], false)?;
    let f11 = m.cofactor(f1, cb[pos], true)?;
    let f10 = m.cofactor(f1, cb[pos], false)?;
    let f01 = m.cofactor(f0, cb[pos], true)?;
    let f00 = m.cofactor(f0, cb[pos], false)?;
    let t11 = transpose_rec(m, f11, rb, cb, pos + 1, memo)?;
    let t10 = transpose_rec(m, f10, rb, cb, pos + 1, memo)?;
    let t01 = transpose_rec(m, f01, rb, cb, pos + 1, memo)?;
    let t00 = transpose_rec(m, f00, rb, cb, pos + 1, memo)?;
    // T(r=1) takes A(c=1, .) entries: swap the off quadrants.
    let hi = m.mk_node(cb[pos], t11, t01);
    let lo = m.mk_node(cb[pos], t10, t00);
    let r = m.mk_node(rb[pos], hi, lo);
    memo.insert((f, pos), r);
    Ok(r)
}

/// Diagonal of a bit-square matrix as a vector over the row bits.
pub fn mat_diagonal(m: &AddManager, a: &MatF) -> Result<VecF> {
    if a.row_bits.len() != a.col_bits.len() {
        return Err(LinalgError::Dim {
            what: "mat_diagonal (bit-square only)",
            expected: a.row_bits.len(),
            got: a.col_bits.len(),
        });
    }
    let mut memo = FxHashMap::default();
    let fun = diag_rec(m, a.fun, &a.row_bits, &a.col_bits, 0, &mut memo)?;
    Ok(VecF::raw(fun, a.row_bits.clone(), a.rows.min(a.cols)))
}

fn diag_rec(
    m: &AddManager,
    f: AddRef,
    rb: &[VarId],
    cb: &[VarId],
    pos: usize,
    memo: &mut FxHashMap<(AddRef, usize), AddRef>,
) -> Result<AddRef> {
    if pos == rb.len() {
        return Ok(f);
    }
    if m.is_terminal(f) {
        return Ok(f);
    }
    if let Some(&r) = memo.get(&(f, pos)) {
        return Ok(r);
    }
    let f11 = m.cofactor(m.cofactor(f, rb[pos], true)?, cb[pos], true)?;
    let f00 = m.cofactor(m.cofactor(f, rb[pos], false)?, cb[pos], false)?;
    let hi = diag_rec(m, f11, rb, cb, pos + 1, memo)?;
    let lo = diag_rec(m, f00, rb, cb, pos + 1, memo)?;
    let r = m.mk_node(rb[pos], hi, lo);
    memo.insert((f, pos), r);
    Ok(r)
}
