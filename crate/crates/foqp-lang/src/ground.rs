//! Naive grounding: enumerate every row and column assignment and evaluate
//! the guards and coefficients directly. This is the canonical (ground)
//! normal form the direct compiler must reproduce exactly, and the input to
//! the ground-and-solve baseline.
//!
//! The interpreter here shares no code with the ADD compiler beyond the AST,
//! so the equivalence tests between the two paths are meaningful.

use crate::ast::*;
use crate::prop::{eval_coeff, eval_formula};
use crate::{bits_for, FoqpError};

/// Dense ground form, with the same padded index spaces and masks as the
/// compiled [`crate::QpStandard`].
#[derive(Debug, Clone)]
pub struct GroundForm {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub q: Option<Vec<Vec<f64>>>,
    pub row_mask: Vec<f64>,
    pub col_mask: Vec<f64>,
    pub active_cols: Vec<f64>,
    pub ineq_mask: Vec<f64>,
    pub num_blocks: usize,
    pub row_unit_bits: usize,
    pub col_width: usize,
}

fn bits_of(value: usize, width: usize) -> Vec<bool> {
    (0..width).map(|b| (value >> (width - 1 - b)) & 1 == 1).collect()
}

/// Grounds a quantifier-free program, enumerating all assignments that
/// satisfy the guards. Fails if the total bit budget exceeds `max_bits`
/// (default 24 via [`ground`]).
pub fn ground_with_limit(foqp: &Foqp, max_bits: usize) -> Result<GroundForm, FoqpError> {
    if !foqp.is_quantifier_free() {
        return Err(FoqpError::NotPropositional);
    }
    let mut col_width: Option<usize> = None;
    let mut note_width = |w: usize| {
        col_width = Some(col_width.map_or(w, |e| e.max(w)));
    };
    for t in &foqp.linear {
        note_width(foqp.decl_width(&t.binder).unwrap());
    }
    for t in &foqp.quad {
        note_width(foqp.decl_width(&t.binder).unwrap());
    }
    for blk in &foqp.constraints {
        note_width(foqp.decl_width(&blk.body_binder).unwrap());
    }
    let col_width = col_width.ok_or(FoqpError::EmptyProgram)?;

    let num_blocks = foqp.constraints.len();
    let nblock_bits = if num_blocks > 1 { bits_for(num_blocks) } else { 0 };
    let row_widths: Vec<usize> = foqp
        .constraints
        .iter()
        .map(|blk| blk.row_binders.iter().map(|b| foqp.decl_width(b).unwrap()).sum())
        .collect();
    let row_unit = row_widths.iter().copied().max().unwrap_or(0);

    let total_bits = nblock_bits + row_unit + col_width;
    if total_bits > max_bits {
        return Err(FoqpError::BitBudget { bits: total_bits, limit: max_bits });
    }

    let rows = 1usize << (nblock_bits + row_unit);
    let cols = 1usize << col_width;

    let mut a = vec![vec![0.0; cols]; rows];
    let mut b = vec![0.0; rows];
    let mut row_mask = vec![0.0; rows];
    let mut ineq_mask = vec![0.0; rows];
    let mut active = vec![0.0; cols];

    for (k, blk) in foqp.constraints.iter().enumerate() {
        let widths: Vec<usize> =
            blk.row_binders.iter().map(|b| foqp.decl_width(b).unwrap()).collect();
        let used: usize = widths.iter().sum();
        let mut scope: Vec<(String, usize)> = blk
            .row_binders
            .iter()
            .zip(&widths)
            .map(|(n, &w)| (n.clone(), w))
            .collect();
        scope.push((blk.body_binder.clone(), col_width));

        for pattern in 0..1usize << used {
            // narrower blocks occupy the leading row bits; the rest are zero
            let r = (k << row_unit) | (pattern << (row_unit - used));
            // split the pattern into per-binder values
            let mut values: Vec<Vec<bool>> = Vec::with_capacity(scope.len());
            let mut shift = used;
            for &w in &widths {
                shift -= w;
                values.push(bits_of((pattern >> shift) & ((1 << w) - 1), w));
            }
            values.push(Vec::new()); // placeholder for the body binder
            let row_scope = &scope[..widths.len()];
            let row_values = &values[..widths.len()];
            if !eval_formula(&blk.row_guard, row_scope, row_values)? {
                continue;
            }
            row_mask[r] = 1.0;
            if blk.sense == Sense::Ge {
                ineq_mask[r] = 1.0;
            }
            b[r] = eval_coeff(&blk.rhs, row_scope, row_values)?;
            for col in 0..cols {
                *values.last_mut().unwrap() = bits_of(col, col_width);
                if eval_formula(&blk.body_guard, &scope, &values)? {
                    let v = eval_coeff(&blk.coeff, &scope, &values)?;
                    a[r][col] = v;
                    if v != 0.0 {
                        active[col] = 1.0;
                    }
                }
            }
        }
    }

    let mut c = vec![0.0; cols];
    let mut col_mask = vec![0.0; cols];
    for t in &foqp.linear {
        let scope = vec![(t.binder.clone(), col_width)];
        for (col, slot) in c.iter_mut().enumerate() {
            let values = vec![bits_of(col, col_width)];
            if eval_formula(&t.guard, &scope, &values)? {
                *slot += eval_coeff(&t.coeff, &scope, &values)?;
                col_mask[col] = 1.0;
                active[col] = 1.0;
            }
        }
    }

    let q = if foqp.quad.is_empty() {
        None
    } else {
        let mut raw = vec![vec![0.0; cols]; cols];
        for t in &foqp.quad {
            let scope =
                vec![(t.binder.clone(), col_width), (t.binder2.clone(), col_width)];
            for (x, row) in raw.iter_mut().enumerate() {
                for (x2, slot) in row.iter_mut().enumerate() {
                    let values = vec![bits_of(x, col_width), bits_of(x2, col_width)];
                    if eval_formula(&t.guard, &scope, &values)? {
                        *slot += eval_coeff(&t.coeff, &scope, &values)?;
                    }
                }
            }
        }
        let mut sym = vec![vec![0.0; cols]; cols];
        for x in 0..cols {
            for x2 in 0..cols {
                sym[x][x2] = (raw[x][x2] + raw[x2][x]) * 0.5;
                if sym[x][x2] != 0.0 {
                    active[x] = 1.0;
                    active[x2] = 1.0;
                }
            }
        }
        Some(sym)
    };

    Ok(GroundForm {
        a,
        b,
        c,
        q,
        row_mask,
        col_mask,
        active_cols: active,
        ineq_mask,
        num_blocks,
        row_unit_bits: row_unit,
        col_width,
    })
}

/// Grounds with the default 24-bit safety budget.
pub fn ground(foqp: &Foqp) -> Result<GroundForm, FoqpError> {
    ground_with_limit(foqp, 24)
}
