use add_core::{AddManager, AddNode, AddRef, BinOp, VarId};
use rustc_hash::FxHashMap;

use crate::types::{bits_for, DiagF, VecF};
use crate::{LinalgError, Result};

fn same_bits(u: &VecF, v: &VecF, what: &'static str) -> Result<()> {
    if u.bits != v.bits || u.len != v.len {
        return Err(LinalgError::Dim { what, expected: u.len, got: v.len });
    }
    Ok(())
}

fn pointwise(m: &AddManager, op: BinOp, u: &VecF, v: &VecF, what: &'static str) -> Result<VecF> {
    same_bits(u, v, what)?;
    let fun = m.apply(op, u.fun, v.fun)?;
    Ok(VecF::raw(fun, u.bits.clone(), u.len))
}

pub fn vec_add(m: &AddManager, u: &VecF, v: &VecF) -> Result<VecF> {
    pointwise(m, BinOp::Add, u, v, "vec_add")
}

pub fn vec_sub(m: &AddManager, u: &VecF, v: &VecF) -> Result<VecF> {
    pointwise(m, BinOp::Sub, u, v, "vec_sub")
}

pub fn vec_hadamard(m: &AddManager, u: &VecF, v: &VecF) -> Result<VecF> {
    pointwise(m, BinOp::Mul, u, v, "vec_hadamard")
}

pub fn scalar_mul(m: &AddManager, k: f64, v: &VecF) -> Result<VecF> {
    if k == 1.0 {
        return Ok(v.clone());
    }
    let kf = m.mk_terminal(k)?;
    let kv = VecF::raw(kf, v.bits.clone(), v.len);
    pointwise(m, BinOp::Mul, &kv, v, "scalar_mul")
}

/// Sum of all `2^bits` entries, by recursive descent with memoization.
/// Levels the function skips contribute a factor of two.
pub fn element_sum(m: &AddManager, v: &VecF) -> Result<f64> {
    let mut memo: FxHashMap<(add_core::AddRef, usize), f64> = FxHashMap::default();
    let total = sum_rec(m, v.fun, &v.bits, 0, &mut memo);
    if !total.is_finite() {
        return Err(LinalgError::NonFiniteMap(total));
    }
    Ok(total)
}

fn sum_rec(
    m: &AddManager,
    f: AddRef,
    bits: &[VarId],
    pos: usize,
    memo: &mut FxHashMap<(add_core::AddRef, usize), f64>,
) -> f64 {
    if pos == bits.len() {
        return match m.node(f) {
            AddNode::Terminal(t) => t,
            AddNode::Internal { .. } => unreachable!("support inside declared bits"),
        };
    }
    let key = (f, pos);
    if let Some(&s) = memo.get(&key) {
        return s;
    }
    let s = match m.node(f) {
        AddNode::Internal { var, high, low } if var == bits[pos] => {
            sum_rec(m, high, bits, pos + 1, memo) + sum_rec(m, low, bits, pos + 1, memo)
        }
        _ => 2.0 * sum_rec(m, f, bits, pos + 1, memo),
    };
    memo.insert(key, s);
    s
}

/// Applies `w` to every terminal. Canonicity may merge terminals that map
/// to the same value.
pub fn map_elements(m: &AddManager, w: impl Fn(f64) -> f64, v: &VecF) -> Result<VecF> {
    let fun = map_fun(m, &w, v.fun)?;
    Ok(VecF::raw(fun, v.bits.clone(), v.len))
}

pub(crate) fn map_fun(m: &AddManager, w: &impl Fn(f64) -> f64, f: AddRef) -> Result<AddRef> {
    let mut memo: FxHashMap<add_core::AddRef, AddRef> = FxHashMap::default();
    map_rec(m, w, f, &mut memo)
}

/// Terminal map on a raw handle, for callers working below the vector layer.
pub fn map_terminals(m: &AddManager, w: impl Fn(f64) -> f64, f: AddRef) -> Result<AddRef> {
    map_fun(m, &w, f)
}

fn map_rec(
    m: &AddManager,
    w: &impl Fn(f64) -> f64,
    f: AddRef,
    memo: &mut FxHashMap<add_core::AddRef, AddRef>,
) -> Result<AddRef> {
    if let Some(&r) = memo.get(&f) {
        return Ok(r);
    }
    let r = match m.node(f) {
        AddNode::Terminal(t) => {
            let mapped = w(t);
            if !mapped.is_finite() {
                return Err(LinalgError::NonFiniteMap(t));
            }
            m.mk_terminal(mapped)?
        }
        AddNode::Internal { var, high, low } => {
            let h = map_rec(m, w, high, memo)?;
            let l = map_rec(m, w, low, memo)?;
            m.mk_node(var, h, l)
        }
    };
    memo.insert(f, r);
    Ok(r)
}

pub fn dot(m: &AddManager, u: &VecF, v: &VecF) -> Result<f64> {
    let prod = vec_hadamard(m, u, v)?;
    element_sum(m, &prod)
}

pub fn norm2_sq(m: &AddManager, v: &VecF) -> Result<f64> {
    dot(m, v, v)
}

pub fn norm2(m: &AddManager, v: &VecF) -> Result<f64> {
    Ok(norm2_sq(m, v)?.sqrt())
}

/// Minimum entry over the full padded length. Every terminal of a reduced
/// ADD is reachable, so this is the minimum over reachable terminals.
pub fn min_element(m: &AddManager, v: &VecF) -> Result<f64> {
    fold_terminals(m, v.fun, f64::INFINITY, f64::min)
}

pub fn max_element(m: &AddManager, v: &VecF) -> Result<f64> {
    fold_terminals(m, v.fun, f64::NEG_INFINITY, f64::max)
}

fn fold_terminals(m: &AddManager, f: AddRef, init: f64, fold: fn(f64, f64) -> f64) -> Result<f64> {
    let mut acc = init;
    let mut seen = rustc_hash::FxHashSet::default();
    let mut stack = vec![f];
    while let Some(n) = stack.pop() {
        if !seen.insert(n) {
            continue;
        }
        match m.node(n) {
            AddNode::Terminal(t) => acc = fold(acc, t),
            AddNode::Internal { high, low, .. } => {
                stack.push(high);
                stack.push(low);
            }
        }
    }
    Ok(acc)
}

/// Pointwise reciprocal; zero entries are a singularity error.
pub fn vec_reciprocal(m: &AddManager, v: &VecF) -> Result<VecF> {
    let mut zero_hit = false;
    let mapped = map_elements(
        m,
        |t| {
            if t == 0.0 {
                f64::NAN
            } else {
                1.0 / t
            }
        },
        v,
    );
    if let Err(LinalgError::NonFiniteMap(t)) = &mapped {
        if *t == 0.0 {
            zero_hit = true;
        }
    }
    if zero_hit {
        return Err(LinalgError::SingularDiagonal);
    }
    mapped
}

pub fn diag_apply(m: &AddManager, d: &DiagF, v: &VecF) -> Result<VecF> {
    vec_hadamard(m, &d.diag, v)
}

pub fn diag_reciprocal(m: &AddManager, d: &DiagF) -> Result<DiagF> {
    Ok(DiagF::new(vec_reciprocal(m, &d.diag)?))
}

/// Constant vector over fresh bits; padded entries beyond `len` are zero.
pub fn constant_vec(m: &AddManager, len: usize, value: f64) -> Result<VecF> {
    let nbits = bits_for(len);
    let bits = m.add_vars(nbits);
    constant_vec_on(m, &bits, len, value)
}

pub fn constant_vec_on(m: &AddManager, bits: &[VarId], len: usize, value: f64) -> Result<VecF> {
    let vals = vec![value; len];
    vec_from_dense_on(m, bits, &vals)
}

/// Standard basis vector `e_i` over the given bits.
pub fn basis_vec(m: &AddManager, bits: &[VarId], len: usize, i: usize) -> Result<VecF> {
    if i >= len {
        return Err(LinalgError::IndexOutOfRange { index: i, limit: len });
    }
    let mut fun = m.one();
    for (b, &var) in bits.iter().enumerate().rev() {
        let bit = (i >> (bits.len() - 1 - b)) & 1 == 1;
        fun = if bit { m.mk_node(var, fun, m.zero()) } else { m.mk_node(var, m.zero(), fun) };
    }
    Ok(VecF::raw(fun, bits.to_vec(), len))
}

/// Builds a vector from dense values on fresh index bits.
pub fn vec_from_dense(m: &AddManager, vals: &[f64]) -> Result<VecF> {
    let nbits = bits_for(vals.len());
    let bits = m.add_vars(nbits);
    vec_from_dense_on(m, &bits, vals)
}

/// Builds a vector from dense values on the given bits (zero padded).
pub fn vec_from_dense_on(m: &AddManager, bits: &[VarId], vals: &[f64]) -> Result<VecF> {
    let padded = 1usize << bits.len();
    if vals.len() > padded {
        return Err(LinalgError::Dim { what: "vec_from_dense", expected: padded, got: vals.len() });
    }
    let fun = build_vec(m, bits, 0, 0, vals)?;
    Ok(VecF::raw(fun, bits.to_vec(), vals.len()))
}

fn build_vec(m: &AddManager, bits: &[VarId], pos: usize, base: usize, vals: &[f64]) -> Result<AddRef> {
    if pos == bits.len() {
        let v = vals.get(base).copied().unwrap_or(0.0);
        return Ok(m.mk_terminal(v)?);
    }
    // Skip fully padded subtrees early.
    let width = 1usize << (bits.len() - pos);
    if base >= vals.len() {
        return Ok(m.zero());
    }
    let half = width / 2;
    let lo = build_vec(m, bits, pos + 1, base, vals)?;
    let hi = build_vec(m, bits, pos + 1, base + half, vals)?;
    Ok(m.mk_node(bits[pos], hi, lo))
}

/// Expands a vector to dense values of its logical length.
pub fn to_dense_vec(m: &AddManager, v: &VecF) -> Vec<f64> {
    let mut out = vec![0.0; v.padded_len()];
    fill_vec(m, v.fun, &v.bits, 0, 0, &mut out);
    out.truncate(v.len);
    out
}

fn fill_vec(m: &AddManager, f: AddRef, bits: &[VarId], pos: usize, base: usize, out: &mut [f64]) {
    let width = 1usize << (bits.len() - pos);
    match m.node(f) {
        AddNode::Terminal(t) => {
            if t != 0.0 {
                for slot in &mut out[base..base + width] {
                    *slot = t;
                }
            }
        }
        AddNode::Internal { var, high, low } => {
            debug_assert!(bits[pos..].contains(&var));
            if var == bits[pos] {
                fill_vec(m, low, bits, pos + 1, base, out);
                fill_vec(m, high, bits, pos + 1, base + width / 2, out);
            } else {
                fill_vec(m, f, bits, pos + 1, base, out);
                fill_vec(m, f, bits, pos + 1, base + width / 2, out);
            }
        }
    }
}
