//! Direct compilation of a quantifier-free program into ADD form, without
//! grounding: every guard becomes a 0/1 ADD, every coefficient a
//! pseudo-Boolean ADD, and the constraint matrix is the pointwise product
//! `[block] * [psi(y)] * [phi(x,y)] * a(x,y)` summed over blocks.


use add_core::{AddManager, AddRef, BinOp, VarId};
use add_linalg::{transpose, MatF, VecF};

use crate::ast::*;
use crate::prop::resolve_bit;
use crate::{bits_for, FoqpError};

/// Compiled standard-form program.
///
/// Rows live on `(block bits, row bits)` with the block index most
/// significant; columns on the body-binder bits; the optional quadratic
/// form on `(col, col')` pairs. Index spaces are power-of-two padded and
/// 0/1 mask vectors mark the live part:
///
/// - `row_mask`: models of the row guards (rows outside are all-zero),
/// - `col_mask`: models of the objective guards (c is zero elsewhere),
/// - `active_cols`: columns referenced by any objective or constraint term,
/// - `ineq_mask`: active rows of `>=` blocks, which carry slack variables.
///
/// Inequality slacks are kept compositional: the slack block acts as
/// `w -> -(ineq_mask . w)` on a slack vector indexed directly by the row
/// bits, so `A`'s diagram is untouched.
#[derive(Debug, Clone)]
pub struct QpStandard {
    pub a: MatF,
    pub b: VecF,
    pub c: VecF,
    pub q: Option<MatF>,
    pub row_mask: VecF,
    pub col_mask: VecF,
    pub active_cols: VecF,
    pub ineq_mask: VecF,
    pub num_blocks: usize,
    pub block_bits: usize,
    pub row_unit_bits: usize,
    pub col_width: usize,
}

impl QpStandard {
    /// Rows of the padded index space (including masked rows).
    pub fn padded_rows(&self) -> usize {
        self.a.padded_rows()
    }

    pub fn padded_cols(&self) -> usize {
        self.a.padded_cols()
    }

    /// Number of constraints counted as in the canonical form: one row per
    /// block per row-binder assignment.
    pub fn constraint_count(&self) -> usize {
        self.num_blocks << self.row_unit_bits
    }

    /// Column count of the canonical form (the full v-index space).
    pub fn var_count(&self) -> usize {
        1usize << self.col_width
    }
}

struct Env<'a> {
    m: &'a AddManager,
    /// binder name -> its ADD bits (most significant first)
    scope: Vec<(String, Vec<VarId>)>,
}

impl Env<'_> {
    fn widths(&self) -> Vec<(String, usize)> {
        self.scope.iter().map(|(n, b)| (n.clone(), b.len())).collect()
    }

    fn formula(&self, f: &Formula) -> Result<AddRef, FoqpError> {
        let m = self.m;
        Ok(match f {
            Formula::True => m.one(),
            Formula::False => m.zero(),
            Formula::Ref(name) => {
                let widths = self.widths();
                let (i, b) = resolve_bit(name, &widths)
                    .ok_or_else(|| FoqpError::UnknownBit(name.clone()))?;
                m.mk_var(self.scope[i].1[b])?
            }
            Formula::Not(x) => m.apply(BinOp::Sub, m.one(), self.formula(x)?)?,
            Formula::And(a, b) => m.apply(BinOp::Mul, self.formula(a)?, self.formula(b)?)?,
            Formula::Or(a, b) => m.apply(BinOp::Max, self.formula(a)?, self.formula(b)?)?,
            Formula::Atom(p, _) => return Err(FoqpError::UnresolvedAtom(p.clone())),
            Formula::Exists(v, _) | Formula::Forall(v, _) => {
                return Err(FoqpError::UnboundedQuantifier(v.clone()))
            }
        })
    }

    fn coeff(&self, e: &CoeffExpr) -> Result<AddRef, FoqpError> {
        let m = self.m;
        Ok(match e {
            CoeffExpr::Const(v) => m.mk_terminal(*v)?,
            CoeffExpr::Indicator(f) => self.formula(f)?,
            CoeffExpr::Neg(a) => m.apply(BinOp::Sub, m.zero(), self.coeff(a)?)?,
            CoeffExpr::Add(a, b) => m.apply(BinOp::Add, self.coeff(a)?, self.coeff(b)?)?,
            CoeffExpr::Sub(a, b) => m.apply(BinOp::Sub, self.coeff(a)?, self.coeff(b)?)?,
            CoeffExpr::Mul(a, b) => m.apply(BinOp::Mul, self.coeff(a)?, self.coeff(b)?)?,
            CoeffExpr::Table { bits, values } => self.table(bits, values)?,
        })
    }

    /// Builds the ADD of a dense table over the listed bits. The bits are
    /// sorted into manager order and the value cube permuted to match.
    fn table(&self, bits: &[String], values: &[f64]) -> Result<AddRef, FoqpError> {
        let widths = self.widths();
        let mut resolved: Vec<(VarId, usize)> = Vec::with_capacity(bits.len()); // (var, semantic shift)
        let k = bits.len();
        for (j, name) in bits.iter().enumerate() {
            let (i, b) =
                resolve_bit(name, &widths).ok_or_else(|| FoqpError::UnknownBit(name.clone()))?;
            resolved.push((self.scope[i].1[b], k - 1 - j));
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&i| resolved[i].0);
        let sorted_bits: Vec<VarId> = order.iter().map(|&i| resolved[i].0).collect();
        let mut permuted = vec![0.0; 1 << k];
        for (sorted_idx, slot) in permuted.iter_mut().enumerate() {
            let mut semantic = 0usize;
            for (pos, &oi) in order.iter().enumerate() {
                let bit = (sorted_idx >> (k - 1 - pos)) & 1;
                semantic |= bit << resolved[oi].1;
            }
            *slot = values.get(semantic).copied().unwrap_or(0.0);
        }
        let v = add_linalg::vec_from_dense_on(self.m, &sorted_bits, &permuted)?;
        Ok(v.fun)
    }
}

/// Bit layout of a compiled program: block+row bits interleaved with column
/// (and primed column) bits in the manager's global order.
struct Layout {
    block_bits: Vec<VarId>,
    row_bits: Vec<VarId>,
    col_bits: Vec<VarId>,
    col2_bits: Vec<VarId>,
}

/// Lays the program out on the leading variables of the manager, extending
/// the order if needed. The layout is a pure function of the dimensions, so
/// compiling the same program twice into one manager reuses the very same
/// variables and yields handle-identical diagrams.
fn layout(m: &AddManager, nblock: usize, nrow: usize, ncol: usize, quad: bool) -> Layout {
    let mut block_bits = Vec::new();
    let mut row_bits = Vec::new();
    let mut col_bits = Vec::new();
    let mut col2_bits = Vec::new();
    let total_row = nblock + nrow;
    let mut next = 0u32;
    for i in 0..total_row.max(ncol) {
        if i < total_row {
            if i < nblock {
                block_bits.push(VarId(next));
            } else {
                row_bits.push(VarId(next));
            }
            next += 1;
        }
        if i < ncol {
            col_bits.push(VarId(next));
            next += 1;
            if quad {
                col2_bits.push(VarId(next));
                next += 1;
            }
        }
    }
    if m.num_vars() < next as usize {
        m.add_vars(next as usize - m.num_vars());
    }
    Layout { block_bits, row_bits, col_bits, col2_bits }
}

/// The 0/1 cube selecting block `k` on the block bits.
fn block_cube(m: &AddManager, bits: &[VarId], k: usize) -> Result<AddRef, FoqpError> {
    let mut f = m.one();
    for (i, &v) in bits.iter().enumerate() {
        let hi = (k >> (bits.len() - 1 - i)) & 1 == 1;
        let x = m.mk_var(v)?;
        let lit = if hi { x } else { m.apply(BinOp::Sub, m.one(), x)? };
        f = m.apply(BinOp::Mul, f, lit)?;
    }
    Ok(f)
}

/// Zero-forcing cube: all `bits` must be 0.
fn zero_cube(m: &AddManager, bits: &[VarId]) -> Result<AddRef, FoqpError> {
    let mut f = m.one();
    for &v in bits {
        let x = m.mk_var(v)?;
        f = m.apply(BinOp::Mul, f, m.apply(BinOp::Sub, m.one(), x)?)?;
    }
    Ok(f)
}

/// Support indicator of a pseudo-Boolean function: 1 where nonzero.
fn support_indicator(m: &AddManager, f: AddRef) -> Result<AddRef, FoqpError> {
    Ok(add_linalg::map_terminals(m, |t| if t != 0.0 { 1.0 } else { 0.0 }, f)?)
}

/// Compiles a quantifier-free program. The theorem this realizes: the
/// resulting diagrams are identical to the ones obtained from the ground
/// canonical form (see the `ground` module and its equivalence tests).
pub fn compile(m: &AddManager, foqp: &Foqp) -> Result<QpStandard, FoqpError> {
    if !foqp.is_quantifier_free() {
        return Err(FoqpError::NotPropositional);
    }

    // Column space: all v-binders must agree on width.
    let mut col_width: Option<(usize, String)> = None;
    let mut check_width = |name: &str, w: usize| -> Result<(), FoqpError> {
        match &col_width {
            None => {
                col_width = Some((w, name.to_string()));
                Ok(())
            }
            Some((expected, _)) if *expected == w => Ok(()),
            Some((expected, _)) => {
                Err(FoqpError::WidthMismatch { name: name.to_string(), expected: *expected, got: w })
            }
        }
    };
    for t in &foqp.linear {
        check_width(&t.binder, foqp.decl_width(&t.binder).unwrap())?;
    }
    for t in &foqp.quad {
        check_width(&t.binder, foqp.decl_width(&t.binder).unwrap())?;
        check_width(&t.binder2, foqp.decl_width(&t.binder2).unwrap())?;
    }
    for blk in &foqp.constraints {
        check_width(&blk.body_binder, foqp.decl_width(&blk.body_binder).unwrap())?;
    }
    let col_width = col_width.map(|(w, _)| w).ok_or(FoqpError::EmptyProgram)?;

    let num_blocks = foqp.constraints.len();
    let nblock_bits = if num_blocks > 1 { bits_for(num_blocks) } else { 0 };
    let row_widths: Vec<usize> = foqp
        .constraints
        .iter()
        .map(|blk| blk.row_binders.iter().map(|b| foqp.decl_width(b).unwrap()).sum())
        .collect();
    let row_unit = row_widths.iter().copied().max().unwrap_or(0);
    let has_quad = !foqp.quad.is_empty();

    let lay = layout(m, nblock_bits, row_unit, col_width, has_quad);
    let all_row_bits: Vec<VarId> =
        lay.block_bits.iter().chain(lay.row_bits.iter()).copied().collect();
    let padded_rows = 1usize << all_row_bits.len();
    let padded_cols = 1usize << col_width;

    // ---- objective -------------------------------------------------------
    let mut c_fun = m.zero();
    let mut col_mask_fun = m.zero();
    for t in &foqp.linear {
        let env = Env { m, scope: vec![(t.binder.clone(), lay.col_bits.clone())] };
        let guard = env.formula(&t.guard)?;
        let coeff = env.coeff(&t.coeff)?;
        let term = m.apply(BinOp::Mul, guard, coeff)?;
        c_fun = m.apply(BinOp::Add, c_fun, term)?;
        col_mask_fun = m.apply(BinOp::Max, col_mask_fun, guard)?;
    }
    let mut active_fun = col_mask_fun;

    let mut q_fun = m.zero();
    for t in &foqp.quad {
        let env = Env {
            m,
            scope: vec![
                (t.binder.clone(), lay.col_bits.clone()),
                (t.binder2.clone(), lay.col2_bits.clone()),
            ],
        };
        let guard = env.formula(&t.guard)?;
        let coeff = env.coeff(&t.coeff)?;
        let term = m.apply(BinOp::Mul, guard, coeff)?;
        q_fun = m.apply(BinOp::Add, q_fun, term)?;
    }

    // ---- constraint blocks -------------------------------------------------
    let mut a_fun = m.zero();
    let mut b_fun = m.zero();
    let mut row_mask_fun = m.zero();
    let mut ineq_fun = m.zero();
    for (k, blk) in foqp.constraints.iter().enumerate() {
        // this block's row binders take the leading row bits
        let mut scope = Vec::new();
        let mut used = 0usize;
        for b in &blk.row_binders {
            let w = foqp.decl_width(b).unwrap();
            scope.push((b.clone(), lay.row_bits[used..used + w].to_vec()));
            used += w;
        }
        let row_env = Env { m, scope: scope.clone() };
        let mut psi = row_env.formula(&blk.row_guard)?;
        // narrower blocks pin their unused trailing row bits to zero
        if used < row_unit {
            let pad = zero_cube(m, &lay.row_bits[used..])?;
            psi = m.apply(BinOp::Mul, psi, pad)?;
        }
        let sel = block_cube(m, &lay.block_bits, k)?;
        let sel_psi = m.apply(BinOp::Mul, sel, psi)?;

        let mut body_scope = scope.clone();
        body_scope.push((blk.body_binder.clone(), lay.col_bits.clone()));
        let body_env = Env { m, scope: body_scope };
        let phi = body_env.formula(&blk.body_guard)?;
        let acoef = body_env.coeff(&blk.coeff)?;
        let entry = m.apply(BinOp::Mul, phi, acoef)?;
        let block_a = m.apply(BinOp::Mul, sel_psi, entry)?;
        a_fun = m.apply(BinOp::Add, a_fun, block_a)?;

        let rhs = row_env.coeff(&blk.rhs)?;
        let block_b = m.apply(BinOp::Mul, sel_psi, rhs)?;
        b_fun = m.apply(BinOp::Add, b_fun, block_b)?;

        row_mask_fun = m.apply(BinOp::Add, row_mask_fun, sel_psi)?;
        if blk.sense == Sense::Ge {
            ineq_fun = m.apply(BinOp::Add, ineq_fun, sel_psi)?;
        }

        // columns this block touches: project the nonzero entries of its
        // contribution onto the column bits by abstracting the row bits
        let support = support_indicator(m, block_a)?;
        let proj = m.abstract_max(support, &all_row_bits)?;
        active_fun = m.apply(BinOp::Max, active_fun, proj)?;
    }

    // ---- symmetrize Q and fold its support into the active columns --------
    let q = if has_quad {
        let q_raw = MatF::new(m, q_fun, lay.col_bits.clone(), lay.col2_bits.clone(), padded_cols, padded_cols)?;
        let q_t = transpose(m, &q_raw)?;
        let sum = m.apply(BinOp::Add, q_raw.fun, q_t.fun)?;
        let half = m.apply(BinOp::Mul, sum, m.mk_terminal(0.5)?)?;
        let q_sym =
            MatF::new(m, half, lay.col_bits.clone(), lay.col2_bits.clone(), padded_cols, padded_cols)?;
        // Q is symmetric, so the column-side projection of its support
        // covers both index positions.
        let support = support_indicator(m, q_sym.fun)?;
        let left = m.abstract_max(support, &lay.col2_bits)?;
        active_fun = m.apply(BinOp::Max, active_fun, left)?;
        Some(q_sym)
    } else {
        None
    };

    Ok(QpStandard {
        a: MatF::new(m, a_fun, all_row_bits.clone(), lay.col_bits.clone(), padded_rows, padded_cols)?,
        b: VecF::new(m, b_fun, all_row_bits.clone(), padded_rows)?,
        c: VecF::new(m, c_fun, lay.col_bits.clone(), padded_cols)?,
        q,
        row_mask: VecF::new(m, row_mask_fun, all_row_bits.clone(), padded_rows)?,
        col_mask: VecF::new(m, col_mask_fun, lay.col_bits.clone(), padded_cols)?,
        active_cols: VecF::new(m, active_fun, lay.col_bits.clone(), padded_cols)?,
        ineq_mask: VecF::new(m, ineq_fun, all_row_bits, padded_rows)?,
        num_blocks,
        block_bits: nblock_bits,
        row_unit_bits: row_unit,
        col_width,
    })
}
