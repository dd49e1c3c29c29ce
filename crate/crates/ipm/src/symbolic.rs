//! The symbolic backend: every operation of the outer loop lands on ADD
//! vector algebra.
//!
//! Column-space vectors are pairs: the main part over the column bits and,
//! when the program has inequality rows, a slack part indexed directly by
//! the row bits. The extended constraint matrix acts compositionally,
//! `A_ext (x, w) = A x - ineq_mask . w`, so the slack block never
//! materializes and `A`'s diagram stays as compiled.

use std::cell::{Cell, RefCell};

use add_core::{AddManager, Assignment, BinOp, VarId};
use add_linalg as la;
use add_linalg::{MatF, VecF};
use foqp_lang::QpStandard;

use crate::backend::IpmBackend;
use crate::options::RepStats;
use crate::IpmError;

/// A backend vector: `main` over the column or row bits, plus the slack
/// component for column-space vectors of slack-extended problems.
#[derive(Debug, Clone)]
pub struct SymVec {
    pub main: VecF,
    pub slack: Option<VecF>,
}

impl SymVec {
    fn plain(main: VecF) -> Self {
        SymVec { main, slack: None }
    }
}

enum SymForm {
    /// Compiled standard form: `A`, `b`, `c`, optional diagonal or general
    /// `Q`, masks, and the compositional slack block.
    Standard {
        a: MatF,
        b: VecF,
        c: VecF,
        q: Option<MatF>,
        q_diag: Option<VecF>,
        a_diag: Option<VecF>,
        /// A with squared entries, for the normal-matrix diagonal.
        a_sq: MatF,
        row_mask: VecF,
        active_cols: VecF,
        ineq_mask: VecF,
        has_slack: bool,
        has_rows: bool,
        n_active: f64,
    },
    /// Bounds-only split least squares: tau 1'(u,v) + ||M (W (u-v)) - b||^2
    /// with u, v >= 0 stacked on a selector bit. Products with the sensing
    /// matrix are Walsh matvecs masked by the row selection.
    SplitLs {
        w: MatF,
        row_sel: VecF,
        c: VecF,
        sel_bit: VarId,
        index_bits: Vec<VarId>,
        n_active: f64,
    },
}

/// A problem instance owning its manager; implements [`IpmBackend`] on ADD
/// operations only.
pub struct SymProblem {
    m: AddManager,
    form: RefCell<SymForm>,
    compact_limit: Cell<usize>,
}

impl SymProblem {
    /// Wraps a compiled program. Detects diagonal `Q` (for the separable
    /// path) and diagonal `A` (for the box path) by handle comparison
    /// against the embedded diagonal.
    pub fn from_qp(m: AddManager, qp: QpStandard) -> Result<Self, IpmError> {
        let q_diag = match &qp.q {
            None => {
                // LP: Q = 0, diagonal by convention
                Some(VecF::new(&m, m.zero(), qp.a.col_bits.clone(), qp.a.padded_cols())?)
            }
            Some(q) => {
                let d = la::mat_diagonal(&m, q)?;
                let ident = la::identity_on(&m, q.row_bits.clone(), q.col_bits.clone())?;
                let embedded = m.apply(BinOp::Mul, ident.fun, d.fun)?;
                if embedded == q.fun {
                    Some(d)
                } else {
                    None
                }
            }
        };
        let has_slack = la::element_sum(&m, &qp.ineq_mask)? > 0.0;
        let has_rows = la::element_sum(&m, &qp.row_mask)? > 0.0;
        let n_active =
            la::element_sum(&m, &qp.active_cols)? + la::element_sum(&m, &qp.ineq_mask)?;
        let a_diag = if !has_slack
            && has_rows
            && qp.a.row_bits.len() == qp.a.col_bits.len()
        {
            let d = la::mat_diagonal(&m, &qp.a)?;
            let ident = la::identity_on(&m, qp.a.row_bits.clone(), qp.a.col_bits.clone())?;
            let embedded = m.apply(BinOp::Mul, ident.fun, d.fun)?;
            if embedded == qp.a.fun {
                Some(d)
            } else {
                None
            }
        } else {
            None
        };
        let a_sq_fun = m.apply(BinOp::Mul, qp.a.fun, qp.a.fun)?;
        let a_sq = MatF::new(
            &m,
            a_sq_fun,
            qp.a.row_bits.clone(),
            qp.a.col_bits.clone(),
            qp.a.rows,
            qp.a.cols,
        )?;
        let form = SymForm::Standard {
            a: qp.a,
            b: qp.b,
            c: qp.c,
            q: qp.q,
            q_diag,
            a_diag,
            a_sq,
            row_mask: qp.row_mask,
            active_cols: qp.active_cols,
            ineq_mask: qp.ineq_mask,
            has_slack,
            has_rows,
            n_active,
        };
        Ok(SymProblem { m, form: RefCell::new(form), compact_limit: Cell::new(2_000_000) })
    }

    /// Builds the split-variable bounds-only form of
    /// `min tau ||x||_1 + ||M W x - b||^2` on a fresh selector bit: column
    /// index = (selector, signal index), selector 0 holding the positive
    /// part. `w` is the square Walsh operator, `row_sel` the 0/1 row
    /// selection mask, `b_obs` the (already masked) observation.
    pub fn split_least_squares(
        m: AddManager,
        w: MatF,
        row_sel: VecF,
        b_obs: VecF,
        tau: f64,
        sel_bit: VarId,
    ) -> Result<Self, IpmError> {
        let index_bits = w.col_bits.clone();
        // c = (tau - 2 W' M b, tau + 2 W' M b) stacked on the selector
        let masked = la::vec_hadamard(&m, &row_sel, &b_obs)?;
        let wtb = la::matvec_t(&m, &w, &masked)?;
        let two = la::scalar_mul(&m, 2.0, &wtb)?;
        let tau_vec = la::constant_vec_on(&m, &index_bits, 1 << index_bits.len(), tau)?;
        let c_u = la::vec_sub(&m, &tau_vec, &two)?;
        let c_v = la::vec_add(&m, &tau_vec, &two)?;
        let c_fun = m.mk_node(sel_bit, c_v.fun, c_u.fun);
        let mut bits = vec![sel_bit];
        bits.extend(index_bits.iter().copied());
        let n = 2usize << index_bits.len();
        let c = VecF::new(&m, c_fun, bits, n)?;
        let n_active = n as f64;
        let form = SymForm::SplitLs { w, row_sel, c, sel_bit, index_bits, n_active };
        Ok(SymProblem { m, form: RefCell::new(form), compact_limit: Cell::new(2_000_000) })
    }

    pub fn manager(&self) -> &AddManager {
        &self.m
    }

    /// Splits a composite split-LS vector into (positive, negative) parts
    /// and returns their difference over the signal index bits.
    pub fn split_difference(&self, v: &SymVec) -> Result<VecF, IpmError> {
        let form = self.form.borrow();
        let SymForm::SplitLs { sel_bit, index_bits, .. } = &*form else {
            return Err(IpmError::Internal("not a split least-squares problem".into()));
        };
        let u = self.m.cofactor(v.main.fun, *sel_bit, false)?;
        let w = self.m.cofactor(v.main.fun, *sel_bit, true)?;
        let diff = self.m.apply(BinOp::Sub, u, w)?;
        Ok(VecF::new(&self.m, diff, index_bits.clone(), 1 << index_bits.len())?)
    }

    /// The sensing product `M W z` of a signal-space vector.
    pub fn sense(&self, z: &VecF) -> Result<VecF, IpmError> {
        let form = self.form.borrow();
        let SymForm::SplitLs { w, row_sel, .. } = &*form else {
            return Err(IpmError::Internal("not a split least-squares problem".into()));
        };
        let t = la::matvec(&self.m, w, z)?;
        Ok(la::vec_hadamard(&self.m, row_sel, &t)?)
    }

    fn zip(
        &self,
        u: &SymVec,
        v: &SymVec,
        op: impl Fn(&AddManager, &VecF, &VecF) -> la::Result<VecF>,
    ) -> Result<SymVec, IpmError> {
        let main = op(&self.m, &u.main, &v.main).map_err(IpmError::from)?;
        let slack = match (&u.slack, &v.slack) {
            (Some(a), Some(b)) => Some(op(&self.m, a, b).map_err(IpmError::from)?),
            (None, None) => None,
            _ => {
                return Err(IpmError::Internal(
                    "mixed slack/plain vectors in pointwise operation".into(),
                ))
            }
        };
        Ok(SymVec { main, slack })
    }

    fn col_zeros(&self) -> Result<SymVec, IpmError> {
        let form = self.form.borrow();
        match &*form {
            SymForm::Standard { c, b, has_slack, .. } => {
                let main = VecF::new(&self.m, self.m.zero(), c.bits.clone(), c.len)?;
                let slack = if *has_slack {
                    Some(VecF::new(&self.m, self.m.zero(), b.bits.clone(), b.len)?)
                } else {
                    None
                };
                Ok(SymVec { main, slack })
            }
            SymForm::SplitLs { c, .. } => {
                Ok(SymVec::plain(VecF::new(&self.m, self.m.zero(), c.bits.clone(), c.len)?))
            }
        }
    }

    fn row_zeros(&self) -> Result<SymVec, IpmError> {
        let form = self.form.borrow();
        match &*form {
            SymForm::Standard { b, .. } => {
                Ok(SymVec::plain(VecF::new(&self.m, self.m.zero(), b.bits.clone(), b.len)?))
            }
            SymForm::SplitLs { w, .. } => Ok(SymVec::plain(VecF::new(
                &self.m,
                self.m.zero(),
                w.row_bits.clone(),
                w.rows,
            )?)),
        }
    }
}

impl IpmBackend for SymProblem {
    type V = SymVec;

    fn b(&self) -> Result<SymVec, IpmError> {
        let form = self.form.borrow();
        match &*form {
            SymForm::Standard { b, .. } => Ok(SymVec::plain(b.clone())),
            SymForm::SplitLs { .. } => {
                drop(form);
                self.row_zeros()
            }
        }
    }

    fn c(&self) -> Result<SymVec, IpmError> {
        let form = self.form.borrow();
        match &*form {
            SymForm::Standard { c, b, has_slack, .. } => {
                let slack = if *has_slack {
                    Some(VecF::new(&self.m, self.m.zero(), b.bits.clone(), b.len)?)
                } else {
                    None
                };
                Ok(SymVec { main: c.clone(), slack })
            }
            SymForm::SplitLs { c, .. } => Ok(SymVec::plain(c.clone())),
        }
    }

    fn a_apply(&self, x: &SymVec) -> Result<SymVec, IpmError> {
        let form = self.form.borrow();
        match &*form {
            SymForm::Standard { a, ineq_mask, .. } => {
                let mut out = la::matvec(&self.m, a, &x.main)?;
                if let Some(wpart) = &x.slack {
                    let masked = la::vec_hadamard(&self.m, ineq_mask, wpart)?;
                    out = la::vec_sub(&self.m, &out, &masked)?;
                }
                Ok(SymVec::plain(out))
            }
            SymForm::SplitLs { .. } => {
                drop(form);
                self.row_zeros()
            }
        }
    }

    fn at_apply(&self, y: &SymVec) -> Result<SymVec, IpmError> {
        let form = self.form.borrow();
        match &*form {
            SymForm::Standard { a, ineq_mask, has_slack, .. } => {
                let main = la::matvec_t(&self.m, a, &y.main)?;
                let slack = if *has_slack {
                    let masked = la::vec_hadamard(&self.m, ineq_mask, &y.main)?;
                    Some(la::scalar_mul(&self.m, -1.0, &masked)?)
                } else {
                    None
                };
                Ok(SymVec { main, slack })
            }
            SymForm::SplitLs { .. } => {
                drop(form);
                self.col_zeros()
            }
        }
    }

    fn q_apply(&self, x: &SymVec) -> Result<SymVec, IpmError> {
        let form = self.form.borrow();
        match &*form {
            SymForm::Standard { q, b, has_slack, .. } => {
                let main = match q {
                    Some(q) => la::matvec(&self.m, q, &x.main)?,
                    None => VecF::new(&self.m, self.m.zero(), x.main.bits.clone(), x.main.len)?,
                };
                let slack = if *has_slack {
                    Some(VecF::new(&self.m, self.m.zero(), b.bits.clone(), b.len)?)
                } else {
                    None
                };
                Ok(SymVec { main, slack })
            }
            SymForm::SplitLs { w, row_sel, sel_bit, index_bits, .. } => {
                // Q (u,v) = 2 (B z, -B z) with z = u - v and B = W' M W.
                let u = self.m.cofactor(x.main.fun, *sel_bit, false)?;
                let vneg = self.m.cofactor(x.main.fun, *sel_bit, true)?;
                let z_fun = self.m.apply(BinOp::Sub, u, vneg)?;
                let z = VecF::new(&self.m, z_fun, index_bits.clone(), 1 << index_bits.len())?;
                let t = la::matvec(&self.m, w, &z)?;
                let masked = la::vec_hadamard(&self.m, row_sel, &t)?;
                let back = la::matvec_t(&self.m, w, &masked)?;
                let two = la::scalar_mul(&self.m, 2.0, &back)?;
                let neg = la::scalar_mul(&self.m, -1.0, &two)?;
                let fun = self.m.mk_node(*sel_bit, neg.fun, two.fun);
                Ok(SymVec::plain(VecF::new(
                    &self.m,
                    fun,
                    x.main.bits.clone(),
                    x.main.len,
                )?))
            }
        }
    }

    fn q_diag(&self) -> Result<Option<SymVec>, IpmError> {
        let form = self.form.borrow();
        match &*form {
            SymForm::Standard { q_diag, b, has_slack, .. } => match q_diag {
                Some(d) => {
                    let slack = if *has_slack {
                        Some(VecF::new(&self.m, self.m.zero(), b.bits.clone(), b.len)?)
                    } else {
                        None
                    };
                    Ok(Some(SymVec { main: d.clone(), slack }))
                }
                None => Ok(None),
            },
            SymForm::SplitLs { .. } => Ok(None),
        }
    }

    fn a_diag(&self) -> Result<Option<SymVec>, IpmError> {
        let form = self.form.borrow();
        match &*form {
            SymForm::Standard { a_diag, .. } => {
                Ok(a_diag.as_ref().map(|d| SymVec::plain(d.clone())))
            }
            SymForm::SplitLs { .. } => Ok(None),
        }
    }

    fn has_rows(&self) -> bool {
        match &*self.form.borrow() {
            SymForm::Standard { has_rows, .. } => *has_rows,
            SymForm::SplitLs { .. } => false,
        }
    }

    fn n_active(&self) -> f64 {
        match &*self.form.borrow() {
            SymForm::Standard { n_active, .. } | SymForm::SplitLs { n_active, .. } => *n_active,
        }
    }

    fn rows_padded(&self) -> usize {
        match &*self.form.borrow() {
            SymForm::Standard { a, .. } => a.padded_rows(),
            SymForm::SplitLs { w, .. } => w.padded_rows(),
        }
    }

    fn mask_rows(&self, v: &SymVec) -> Result<SymVec, IpmError> {
        let form = self.form.borrow();
        match &*form {
            SymForm::Standard { row_mask, .. } => {
                Ok(SymVec::plain(la::vec_hadamard(&self.m, row_mask, &v.main)?))
            }
            SymForm::SplitLs { row_sel, .. } => {
                Ok(SymVec::plain(la::vec_hadamard(&self.m, row_sel, &v.main)?))
            }
        }
    }

    fn mask_cols(&self, v: &SymVec) -> Result<SymVec, IpmError> {
        let form = self.form.borrow();
        match &*form {
            SymForm::Standard { active_cols, ineq_mask, .. } => {
                let main = la::vec_hadamard(&self.m, active_cols, &v.main)?;
                let slack = match &v.slack {
                    Some(w) => Some(la::vec_hadamard(&self.m, ineq_mask, w)?),
                    None => None,
                };
                Ok(SymVec { main, slack })
            }
            SymForm::SplitLs { .. } => Ok(v.clone()),
        }
    }

    fn ones_cols(&self) -> Result<SymVec, IpmError> {
        let z = self.col_zeros()?;
        self.map(&z, &|_| 1.0)
    }

    fn zeros_cols(&self) -> Result<SymVec, IpmError> {
        self.col_zeros()
    }

    fn zeros_rows(&self) -> Result<SymVec, IpmError> {
        self.row_zeros()
    }

    fn basis_row(&self, i: usize) -> Result<SymVec, IpmError> {
        let form = self.form.borrow();
        let (bits, len) = match &*form {
            SymForm::Standard { b, .. } => (b.bits.clone(), b.padded_len()),
            SymForm::SplitLs { w, .. } => (w.row_bits.clone(), w.padded_rows()),
        };
        drop(form);
        Ok(SymVec::plain(la::basis_vec(&self.m, &bits, len, i)?))
    }

    fn vec_from_dense_rows(&self, vals: &[f64]) -> Result<SymVec, IpmError> {
        let form = self.form.borrow();
        let (bits, len) = match &*form {
            SymForm::Standard { b, .. } => (b.bits.clone(), b.len),
            SymForm::SplitLs { w, .. } => (w.row_bits.clone(), w.rows),
        };
        drop(form);
        let mut v = la::vec_from_dense_on(&self.m, &bits, vals)?;
        v.len = len;
        Ok(SymVec::plain(v))
    }

    fn add(&self, u: &SymVec, v: &SymVec) -> Result<SymVec, IpmError> {
        self.zip(u, v, la::vec_add)
    }

    fn sub(&self, u: &SymVec, v: &SymVec) -> Result<SymVec, IpmError> {
        self.zip(u, v, la::vec_sub)
    }

    fn hadamard(&self, u: &SymVec, v: &SymVec) -> Result<SymVec, IpmError> {
        self.zip(u, v, la::vec_hadamard)
    }

    fn scale(&self, k: f64, v: &SymVec) -> Result<SymVec, IpmError> {
        let main = la::scalar_mul(&self.m, k, &v.main)?;
        let slack = match &v.slack {
            Some(w) => Some(la::scalar_mul(&self.m, k, w)?),
            None => None,
        };
        Ok(SymVec { main, slack })
    }

    fn map(&self, v: &SymVec, f: &dyn Fn(f64) -> f64) -> Result<SymVec, IpmError> {
        let main = la::map_elements(&self.m, f, &v.main)?;
        let slack = match &v.slack {
            Some(w) => Some(la::map_elements(&self.m, f, w)?),
            None => None,
        };
        Ok(SymVec { main, slack })
    }

    fn dot(&self, u: &SymVec, v: &SymVec) -> Result<f64, IpmError> {
        let mut total = la::dot(&self.m, &u.main, &v.main)?;
        match (&u.slack, &v.slack) {
            (Some(a), Some(b)) => total += la::dot(&self.m, a, b)?,
            (None, None) => {}
            _ => {
                return Err(IpmError::Internal("mixed slack/plain vectors in dot".into()));
            }
        }
        Ok(total)
    }

    fn sum(&self, v: &SymVec) -> Result<f64, IpmError> {
        let mut total = la::element_sum(&self.m, &v.main)?;
        if let Some(w) = &v.slack {
            total += la::element_sum(&self.m, w)?;
        }
        Ok(total)
    }

    fn min_entry(&self, v: &SymVec) -> Result<f64, IpmError> {
        let mut worst = la::min_element(&self.m, &v.main)?;
        if let Some(w) = &v.slack {
            worst = worst.min(la::min_element(&self.m, w)?);
        }
        Ok(worst)
    }

    fn max_abs_entry(&self, v: &SymVec) -> Result<f64, IpmError> {
        let lo = la::min_element(&self.m, &v.main)?.abs();
        let hi = la::max_element(&self.m, &v.main)?.abs();
        let mut best = lo.max(hi);
        if let Some(w) = &v.slack {
            best = best
                .max(la::min_element(&self.m, w)?.abs())
                .max(la::max_element(&self.m, w)?.abs());
        }
        Ok(best)
    }

    fn normal_diag(&self, d: &SymVec) -> Result<SymVec, IpmError> {
        let form = self.form.borrow();
        match &*form {
            SymForm::Standard { a_sq, ineq_mask, .. } => {
                let mut diag = la::matvec(&self.m, a_sq, &d.main)?;
                if let Some(w) = &d.slack {
                    // the slack block contributes its diagonal on ineq rows
                    let masked = la::vec_hadamard(&self.m, ineq_mask, w)?;
                    diag = la::vec_add(&self.m, &diag, &masked)?;
                }
                Ok(SymVec::plain(diag))
            }
            SymForm::SplitLs { .. } => Err(IpmError::UnsupportedStructure(
                "normal-matrix diagonal is only defined on the equality-row path",
            )),
        }
    }

    fn entry_row(&self, v: &SymVec, i: usize) -> Result<f64, IpmError> {
        let mut asn = Assignment::new();
        let nb = v.main.bits.len();
        for (b, &var) in v.main.bits.iter().enumerate() {
            asn.set(var, (i >> (nb - 1 - b)) & 1 == 1);
        }
        Ok(self.m.eval(v.main.fun, &asn)?)
    }

    fn to_dense_rows(&self, v: &SymVec) -> Result<Vec<f64>, IpmError> {
        let mut full = v.main.clone();
        full.len = full.padded_len();
        Ok(la::to_dense_vec(&self.m, &full))
    }

    fn to_dense_cols(&self, v: &SymVec) -> Result<Vec<f64>, IpmError> {
        let mut out = {
            let mut full = v.main.clone();
            full.len = full.padded_len();
            la::to_dense_vec(&self.m, &full)
        };
        if let Some(w) = &v.slack {
            let mut full = w.clone();
            full.len = full.padded_len();
            out.extend(la::to_dense_vec(&self.m, &full));
        }
        Ok(out)
    }

    fn configure_memory(&self, node_limit: usize) {
        self.compact_limit.set(node_limit.max(1));
    }

    fn should_compact(&self) -> bool {
        self.m.num_nodes() > self.compact_limit.get()
    }

    fn compact(&self, live: &mut [&mut SymVec]) -> Result<(), IpmError> {
        let mut form = self.form.borrow_mut();
        let mut roots: Vec<&mut add_core::AddRef> = Vec::new();
        match &mut *form {
            SymForm::Standard {
                a,
                b,
                c,
                q,
                q_diag,
                a_diag,
                a_sq,
                row_mask,
                active_cols,
                ineq_mask,
                ..
            } => {
                roots.push(&mut a.fun);
                roots.push(&mut b.fun);
                roots.push(&mut c.fun);
                if let Some(q) = q {
                    roots.push(&mut q.fun);
                }
                if let Some(d) = q_diag {
                    roots.push(&mut d.fun);
                }
                if let Some(d) = a_diag {
                    roots.push(&mut d.fun);
                }
                roots.push(&mut a_sq.fun);
                roots.push(&mut row_mask.fun);
                roots.push(&mut active_cols.fun);
                roots.push(&mut ineq_mask.fun);
            }
            SymForm::SplitLs { w, row_sel, c, .. } => {
                roots.push(&mut w.fun);
                roots.push(&mut row_sel.fun);
                roots.push(&mut c.fun);
            }
        }
        for v in live.iter_mut() {
            roots.push(&mut v.main.fun);
            if let Some(w) = &mut v.slack {
                roots.push(&mut w.fun);
            }
        }
        self.m.compact(&mut roots);
        Ok(())
    }

    fn rep_stats(&self) -> RepStats {
        let form = self.form.borrow();
        match &*form {
            SymForm::Standard { a, q, .. } => RepStats {
                nodes_a: self.m.node_count(a.fun),
                nodes_q: q.as_ref().map_or(0, |q| self.m.node_count(q.fun)),
                nodes_total: self.m.num_nodes(),
            },
            SymForm::SplitLs { w, .. } => RepStats {
                nodes_a: self.m.node_count(w.fun),
                nodes_q: 0,
                nodes_total: self.m.num_nodes(),
            },
        }
    }
}
