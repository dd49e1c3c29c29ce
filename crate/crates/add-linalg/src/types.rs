use add_core::{AddManager, AddRef, VarId};

use crate::{LinalgError, Result};

/// A real vector as an ADD over its index bits.
///
/// `bits[0]` is the most significant index bit. The represented length is
/// `2^bits.len()`; `len` is the logical length, and entries at indices
/// `len..2^bits.len()` are exactly zero for anything built by the
/// constructors in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct VecF {
    pub fun: AddRef,
    pub bits: Vec<VarId>,
    pub len: usize,
}

impl VecF {
    /// Wraps raw parts, checking that `fun` only depends on `bits`.
    pub fn new(m: &AddManager, fun: AddRef, bits: Vec<VarId>, len: usize) -> Result<Self> {
        let v = VecF { fun, bits, len };
        v.validate(m)?;
        Ok(v)
    }

    pub(crate) fn raw(fun: AddRef, bits: Vec<VarId>, len: usize) -> Self {
        VecF { fun, bits, len }
    }

    pub fn padded_len(&self) -> usize {
        1usize << self.bits.len()
    }

    pub fn validate(&self, m: &AddManager) -> Result<()> {
        if self.len > self.padded_len() {
            return Err(LinalgError::Dim {
                what: "logical length",
                expected: self.padded_len(),
                got: self.len,
            });
        }
        for v in m.support(self.fun) {
            if !self.bits.contains(&v) {
                return Err(LinalgError::StrayVariable(v.index()));
            }
        }
        Ok(())
    }
}

/// A real matrix as an ADD over row and column index bits.
///
/// `row_bits[0]` / `col_bits[0]` are most significant. The canonical layout
/// interleaves them (`r_0 < c_0 < r_1 < c_1 < ...` in the manager order);
/// the operations only require that each list is ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct MatF {
    pub fun: AddRef,
    pub row_bits: Vec<VarId>,
    pub col_bits: Vec<VarId>,
    pub rows: usize,
    pub cols: usize,
}

impl MatF {
    pub fn new(
        m: &AddManager,
        fun: AddRef,
        row_bits: Vec<VarId>,
        col_bits: Vec<VarId>,
        rows: usize,
        cols: usize,
    ) -> Result<Self> {
        let a = MatF { fun, row_bits, col_bits, rows, cols };
        a.validate(m)?;
        Ok(a)
    }

    pub(crate) fn raw(
        fun: AddRef,
        row_bits: Vec<VarId>,
        col_bits: Vec<VarId>,
        rows: usize,
        cols: usize,
    ) -> Self {
        MatF { fun, row_bits, col_bits, rows, cols }
    }

    pub fn padded_rows(&self) -> usize {
        1usize << self.row_bits.len()
    }

    pub fn padded_cols(&self) -> usize {
        1usize << self.col_bits.len()
    }

    pub fn validate(&self, m: &AddManager) -> Result<()> {
        if self.rows > self.padded_rows() {
            return Err(LinalgError::Dim {
                what: "logical rows",
                expected: self.padded_rows(),
                got: self.rows,
            });
        }
        if self.cols > self.padded_cols() {
            return Err(LinalgError::Dim {
                what: "logical cols",
                expected: self.padded_cols(),
                got: self.cols,
            });
        }
        for v in m.support(self.fun) {
            if !self.row_bits.contains(&v) && !self.col_bits.contains(&v) {
                return Err(LinalgError::StrayVariable(v.index()));
            }
        }
        Ok(())
    }
}

/// A diagonal matrix stored as the vector of its diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagF {
    pub diag: VecF,
}

impl DiagF {
    pub fn new(diag: VecF) -> Self {
        DiagF { diag }
    }
}

/// Number of index bits needed for `n` entries (ceil log2, at least 0).
pub(crate) fn bits_for(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Allocates `nr + nc` fresh variables in interleaved order
/// `r_0, c_0, r_1, c_1, ...` (tails appended when counts differ).
pub fn interleaved_bits(m: &AddManager, nr: usize, nc: usize) -> (Vec<VarId>, Vec<VarId>) {
    let mut rows = Vec::with_capacity(nr);
    let mut cols = Vec::with_capacity(nc);
    for i in 0..nr.max(nc) {
        if i < nr {
            rows.push(m.add_vars(1)[0]);
        }
        if i < nc {
            cols.push(m.add_vars(1)[0]);
        }
    }
    (rows, cols)
}
