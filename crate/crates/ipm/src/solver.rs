//! The primal-dual barrier outer loop.
//!
//! Each iteration solves the perturbed KKT Newton system
//!
//! ```text
//! [ A   0   0 ] [dx]   [ b - Ax          ]
//! [-Q   A'  I ] [dy] = [ c - A'y - s + Qx]
//! [ S   0   X ] [ds]   [ mu e - XSe      ]
//! ```
//!
//! by block elimination to the normal equation
//! `A (Q + Theta^{-1} + rho_p)^{-1} A' dy = f` (`Theta = X S^{-1}`), runs
//! conjugate gradients on it, recovers `dx` and `ds` by diagonal solves,
//! and steps with the fraction-to-boundary rule. Every vector operation
//! goes through the backend, so the same loop drives the symbolic and the
//! ground representation.

use std::time::Instant;

use log::debug;

use crate::backend::IpmBackend;
use crate::cg::{cg_solve, CgStats};
use crate::normal::NormalOperator;
use crate::options::{
    InnerSolve, IpmError, IterRecord, SolveOptions, SolveReport, Structure,
};
use crate::precond::Preconditioner;

/// Interior-point iterate: primal `x`, dual `y`, dual slacks `s`, all
/// strictly positive in `x` and `s` at every accepted step.
#[derive(Debug, Clone)]
pub struct IpmState<V> {
    pub x: V,
    pub y: V,
    pub s: V,
    pub mu: f64,
    pub iter: usize,
}

/// KKT residuals at a state, with the complementarity row targeted at
/// `mu_target` (0 for convergence measurement).
#[derive(Debug, Clone)]
pub struct Residuals<V> {
    pub r_primal: V,
    pub r_dual: V,
    pub r_comp: V,
}

/// Search directions of one iteration.
#[derive(Debug, Clone)]
pub struct Directions<V> {
    pub dx: V,
    pub dy: V,
    pub ds: V,
}

/// Hook observing each iteration's direction before the step is taken;
/// used by diagnostics and the direction-consistency tests. Handles must
/// not be retained across calls (the backend may compact).
pub trait IterObserver<B: IpmBackend> {
    fn on_direction(
        &mut self,
        _be: &B,
        _state: &IpmState<B::V>,
        _mu_target: f64,
        _res: &Residuals<B::V>,
        _dirs: &Directions<B::V>,
    ) -> Result<(), IpmError> {
        Ok(())
    }
}

/// The no-op observer.
pub struct NoObserver;
impl<B: IpmBackend> IterObserver<B> for NoObserver {}

/// Masked KKT residuals: padding coordinates carry exact zeros, so norms
/// need no further masking.
pub fn residuals<B: IpmBackend>(
    be: &B,
    st: &IpmState<B::V>,
    mu_target: f64,
) -> Result<Residuals<B::V>, IpmError> {
    let ax = be.a_apply(&st.x)?;
    let r_primal = be.mask_rows(&be.sub(&be.b()?, &ax)?)?;

    let aty = be.at_apply(&st.y)?;
    let qx = be.q_apply(&st.x)?;
    let mut r_dual = be.sub(&be.c()?, &aty)?;
    r_dual = be.sub(&r_dual, &st.s)?;
    r_dual = be.add(&r_dual, &qx)?;
    let r_dual = be.mask_cols(&r_dual)?;

    let xs = be.hadamard(&st.x, &st.s)?;
    let mu_vec = be.map(&xs, &move |_| mu_target)?;
    let r_comp = be.mask_cols(&be.sub(&mu_vec, &xs)?)?;
    Ok(Residuals { r_primal, r_dual, r_comp })
}

/// Largest step `alpha <= 1` with `v + alpha dv >= (1 - fraction) v`
/// componentwise, for strictly positive `v`.
pub fn step_length<B: IpmBackend>(
    be: &B,
    v: &B::V,
    dv: &B::V,
    fraction: f64,
) -> Result<f64, IpmError> {
    let inv = be.map(v, &|t| 1.0 / t)?;
    let ratio = be.hadamard(dv, &inv)?;
    let worst = be.min_entry(&ratio)?;
    if worst >= 0.0 {
        Ok(1.0)
    } else {
        Ok((-fraction / worst).min(1.0))
    }
}

fn objective<B: IpmBackend>(be: &B, x: &B::V) -> Result<f64, IpmError> {
    let qx = be.q_apply(x)?;
    Ok(be.dot(&be.c()?, x)? + 0.5 * be.dot(x, &qx)?)
}

/// Structure detection: bounds-only when no equality row is active, the
/// normal-equation path when `Q` is diagonal, the coordinatewise path when
/// `A` is diagonal, and an explicit unsupported error otherwise (the
/// general non-separable reduction is out of scope).
pub fn detect_structure<B: IpmBackend>(be: &B) -> Result<Structure, IpmError> {
    if !be.has_rows() {
        return Ok(Structure::BoundsOnly);
    }
    if be.q_diag()?.is_some() {
        return Ok(Structure::SeparableQ);
    }
    if be.a_diag()?.is_some() {
        return Ok(Structure::BoxConstrained);
    }
    Err(IpmError::UnsupportedStructure(
        "equality rows with a non-diagonal Q need the omitted general reduction",
    ))
}

/// Builds the inner-system operator for the current iterate.
///
/// Returns the operator together with the diagonals the recovery step
/// needs: `theta_inv` (clipped `s/x`), `x_inv`, and for the normal path
/// `d = (q_diag + theta_inv + rho_p)^{-1}`.
pub fn build_normal_operator<'a, B: IpmBackend>(
    be: &'a B,
    st: &IpmState<B::V>,
    opts: &SolveOptions,
    structure: Structure,
    rho_primal: f64,
    rho_dual: f64,
) -> Result<(NormalOperator<'a, B>, B::V, B::V, Option<B::V>), IpmError> {
    let clip = opts.theta_clip;
    let x_inv = be.map(&st.x, &|t| 1.0 / t)?;
    let theta_inv_raw = be.hadamard(&st.s, &x_inv)?;
    let theta_inv = be.map(&theta_inv_raw, &move |t| t.clamp(1.0 / clip, clip))?;
    match structure {
        Structure::SeparableQ => {
            let qd = be
                .q_diag()?
                .ok_or(IpmError::UnsupportedStructure("normal path requires diagonal Q"))?;
            let denom = be.add(&qd, &theta_inv)?;
            let d = be.map(&denom, &move |t| 1.0 / (t + rho_primal))?;
            let op = NormalOperator::normal_equation(be, d.clone(), rho_dual);
            Ok((op, theta_inv, x_inv, Some(d)))
        }
        // the box path solves coordinatewise and never applies the
        // operator; bounds-only runs CG on Q + Theta^{-1} directly
        Structure::BoundsOnly | Structure::BoxConstrained => {
            let additive = be.map(&theta_inv, &move |t| t + rho_primal)?;
            let op = NormalOperator::bounds_only(be, additive);
            Ok((op, theta_inv, x_inv, None))
        }
    }
}

/// Recovers `dx` and `ds` from `dy`:
/// `dx = (Q + Theta^{-1})^{-1} (A' dy - g)` with `g = r_dual - X^{-1} r_comp`,
/// `ds = X^{-1} r_comp - Theta^{-1} dx`, which satisfies the second and
/// third Newton rows exactly; all inner-solve error lands in the primal row.
#[allow(clippy::too_many_arguments)]
fn recover_directions<B: IpmBackend>(
    be: &B,
    dy: &B::V,
    g: &B::V,
    x_inv_rc: &B::V,
    theta_inv: &B::V,
    d: &B::V,
) -> Result<(B::V, B::V), IpmError> {
    let aty = be.at_apply(dy)?;
    let rhs = be.sub(&aty, g)?;
    let dx = be.hadamard(d, &rhs)?;
    let ds = be.sub(x_inv_rc, &be.hadamard(theta_inv, &dx)?)?;
    Ok((dx, ds))
}

pub fn ipm_solve<B: IpmBackend>(
    be: &B,
    opts: &SolveOptions,
) -> Result<SolveReport<B::V>, IpmError> {
    ipm_solve_observed(be, opts, &mut NoObserver)
}

pub fn ipm_solve_observed<B: IpmBackend>(
    be: &B,
    opts: &SolveOptions,
    observer: &mut dyn IterObserver<B>,
) -> Result<SolveReport<B::V>, IpmError> {
    let start = Instant::now();
    be.configure_memory(opts.compact_node_limit);
    let structure = match opts.structure {
        Some(s) => s,
        None => detect_structure(be)?,
    };
    let n_active = be.n_active();
    if n_active == 0.0 {
        let x = be.zeros_cols()?;
        return Ok(SolveReport {
            objective: 0.0,
            x: x.clone(),
            y: be.zeros_rows()?,
            s: x,
            converged: true,
            iterations: 0,
            cg_total: 0,
            history: Vec::new(),
            rep: be.rep_stats(),
            time_solve: start.elapsed(),
        });
    }

    // starting point: scaled all-ones, balanced against |b| and |c|
    let b = be.b()?;
    let c = be.c()?;
    let norm_b = be.norm2(&b)?;
    let norm_c = be.norm2(&c)?;
    let xi_x = be.max_abs_entry(&b)?.max(1.0);
    let xi_s = be.max_abs_entry(&c)?.max(1.0);
    let ones = be.ones_cols()?;
    let mut st = IpmState {
        x: be.scale(xi_x, &ones)?,
        s: be.scale(xi_s, &ones)?,
        y: be.zeros_rows()?,
        mu: xi_x * xi_s,
        iter: 0,
    };

    let mut rho_p = if opts.regularize { opts.rho_primal } else { 0.0 };
    let mut rho_d = if opts.regularize { opts.rho_dual } else { 0.0 };
    let mut history: Vec<IterRecord> = Vec::new();
    let mut cg_total = 0usize;
    let mut best_residual = f64::INFINITY;
    let precond_k = opts.effective_precond_k(be.rows_padded());

    for iter in 0..opts.max_outer {
        st.iter = iter;
        let masked_x = be.mask_cols(&st.x)?;
        let mu_meas = be.dot(&masked_x, &st.s)? / n_active;
        st.mu = mu_meas;

        let obj = objective(be, &st.x)?;
        let conv = residuals(be, &st, 0.0)?;
        let rel_p = be.norm2(&conv.r_primal)? / (1.0 + norm_b);
        let rel_d = be.norm2(&conv.r_dual)? / (1.0 + norm_c);
        let rel_c = mu_meas / (1.0 + obj.abs());
        let worst = rel_p.max(rel_d).max(rel_c);
        best_residual = best_residual.min(worst);
        debug!(
            "iter {iter}: mu={mu_meas:.3e} rel_p={rel_p:.3e} rel_d={rel_d:.3e} rel_c={rel_c:.3e}"
        );
        if worst <= opts.tol {
            history.push(IterRecord {
                iter,
                mu: mu_meas,
                rel_primal: rel_p,
                rel_dual: rel_d,
                rel_comp: rel_c,
                alpha: 0.0,
                cg_iters: 0,
                cg_rel_residual: 0.0,
            });
            return Ok(SolveReport {
                objective: obj,
                x: st.x,
                y: st.y,
                s: st.s,
                converged: true,
                iterations: iter,
                cg_total,
                history,
                rep: be.rep_stats(),
                time_solve: start.elapsed(),
            });
        }

        // centered residuals for the direction
        let mu_target = opts.sigma * mu_meas;
        let res = residuals(be, &st, mu_target)?;

        // directions, with adaptive regularization on CG breakdown
        let mut attempt = 0;
        let mut res = res;
        let (dirs, cg_stats) = loop {
            match direction_step(
                be, &mut st, opts, structure, rho_p, rho_d, &mut res, precond_k, &mut cg_total,
            ) {
                Ok(out) => break out,
                Err(IpmError::CgBreakdown { p_ap }) if attempt < 3 => {
                    attempt += 1;
                    rho_p = (rho_p * 10.0).max(1e-10);
                    rho_d = (rho_d * 10.0).max(1e-10);
                    debug!("CG breakdown (p'Ap={p_ap:.3e}); raising regularization to {rho_d:.1e}");
                }
                Err(e) => return Err(e),
            }
        };

        observer.on_direction(be, &st, mu_target, &res, &dirs)?;

        let alpha_x = step_length(be, &st.x, &dirs.dx, opts.fraction_to_boundary)?;
        let alpha_s = step_length(be, &st.s, &dirs.ds, opts.fraction_to_boundary)?;
        let alpha = alpha_x.min(alpha_s);

        st.x = be.add(&st.x, &be.scale(alpha, &dirs.dx)?)?;
        st.s = be.add(&st.s, &be.scale(alpha, &dirs.ds)?)?;
        st.y = be.add(&st.y, &be.scale(alpha, &dirs.dy)?)?;

        if let Some(digits) = opts.quantize_digits {
            let quantized_x = be.map(&st.x, &move |t| quantize(t, digits))?;
            let quantized_s = be.map(&st.s, &move |t| quantize(t, digits))?;
            if be.min_entry(&quantized_x)? > 0.0 && be.min_entry(&quantized_s)? > 0.0 {
                st.x = quantized_x;
                st.s = quantized_s;
                st.y = be.map(&st.y, &move |t| quantize(t, digits))?;
            }
        }

        history.push(IterRecord {
            iter,
            mu: mu_meas,
            rel_primal: rel_p,
            rel_dual: rel_d,
            rel_comp: rel_c,
            alpha,
            cg_iters: cg_stats.iterations,
            cg_rel_residual: cg_stats.rel_residual,
        });

        if be.should_compact() {
            let mut live = vec![&mut st.x, &mut st.y, &mut st.s];
            be.compact(&mut live)?;
        }
    }

    Err(IpmError::IterationLimit { iterations: opts.max_outer, best_residual })
}

#[allow(clippy::too_many_arguments)]
fn direction_step<B: IpmBackend>(
    be: &B,
    st: &mut IpmState<B::V>,
    opts: &SolveOptions,
    structure: Structure,
    rho_p: f64,
    rho_d: f64,
    res: &mut Residuals<B::V>,
    precond_k: usize,
    cg_total: &mut usize,
) -> Result<(Directions<B::V>, CgStats), IpmError> {
    let (mut op, mut theta_inv, x_inv, d) =
        build_normal_operator(be, st, opts, structure, rho_p, rho_d)?;
    let mut x_inv_rc = be.hadamard(&x_inv, &res.r_comp)?;
    // g = r_dual - X^{-1} r_comp, from the block elimination
    let mut g = be.sub(&res.r_dual, &x_inv_rc)?;

    match structure {
        Structure::SeparableQ => {
            let mut d = d.expect("normal path carries D");
            // f = r_primal + A D g
            let adg = be.a_apply(&be.hadamard(&d, &g)?)?;
            let f = be.add(&res.r_primal, &adg)?;

            // Stop CG against the norm of the full Newton right-hand side:
            // the assembled f can be much larger than (r_p, r_d, r_c), and
            // the whole inner-solve error lands in the primal row.
            let rhs_norm = (be.dot(&res.r_primal, &res.r_primal)?
                + be.dot(&res.r_dual, &res.r_dual)?
                + be.dot(&res.r_comp, &res.r_comp)?)
            .sqrt();
            let f_norm = be.norm2(&f)?;
            let reduction = if f_norm > 0.0 {
                (opts.cg_reduction * (rhs_norm / f_norm)).min(opts.cg_reduction)
            } else {
                opts.cg_reduction
            };

            let force = opts.inner == InnerSolve::Direct;
            let direct = if opts.inner != InnerSolve::Cg {
                be.direct_normal_solve(&d, rho_d, &f, force)
            } else {
                None
            };
            let (dy, stats) = match direct {
                Some(result) => (result?, CgStats { converged: true, ..CgStats::default() }),
                None => {
                    let mut pre = if precond_k > 0 {
                        Some(Preconditioner::build(be, &mut op, precond_k)?)
                    } else {
                        None
                    };
                    // everything the recovery and the caller still need must
                    // survive a mid-CG compaction
                    let mut extra: Vec<&mut B::V> = vec![
                        &mut st.x,
                        &mut st.y,
                        &mut st.s,
                        &mut res.r_primal,
                        &mut res.r_dual,
                        &mut res.r_comp,
                        &mut g,
                        &mut x_inv_rc,
                        &mut theta_inv,
                        &mut d,
                    ];
                    cg_solve(be, &mut op, f, pre.as_mut(), reduction, opts.max_cg, &mut extra)?
                }
            };
            *cg_total += stats.iterations;
            let (dx, ds) = recover_directions(be, &dy, &g, &x_inv_rc, &theta_inv, &d)?;
            Ok((Directions { dx, dy, ds }, stats))
        }
        Structure::BoundsOnly => {
            // (Q + Theta^{-1} + rho_p) dx = -g
            let rhs = be.sub(&x_inv_rc, &res.r_dual)?;
            let mut extra: Vec<&mut B::V> = vec![
                &mut st.x,
                &mut st.y,
                &mut st.s,
                &mut res.r_primal,
                &mut res.r_dual,
                &mut res.r_comp,
                &mut x_inv_rc,
                &mut theta_inv,
            ];
            let (dx, stats) =
                cg_solve(be, &mut op, rhs, None, opts.cg_reduction, opts.max_cg, &mut extra)?;
            drop(extra);
            *cg_total += stats.iterations;
            let ds = be.sub(&x_inv_rc, &be.hadamard(&theta_inv, &dx)?)?;
            let dy = be.zeros_rows()?;
            Ok((Directions { dx, dy, ds }, stats))
        }
        Structure::BoxConstrained => {
            // A diagonal: the Newton system splits coordinatewise. Moves
            // between the row and column index spaces go through A itself:
            // A^{-1} w = (A'A)^{-1} A' w and A^{-T} v = (A A')^{-1} A v.
            let a_diag = be
                .a_diag()?
                .ok_or(IpmError::UnsupportedStructure("box path requires diagonal A"))?;
            let safe_recip = |t: f64| if t == 0.0 { 0.0 } else { 1.0 / t };
            let asq_col = be.at_apply(&a_diag)?; // a_ii^2 in column space
            let asq_col_inv = be.map(&asq_col, &safe_recip)?;
            let asq_row = be.hadamard(&a_diag, &a_diag)?;
            let asq_row_inv = be.map(&asq_row, &safe_recip)?;

            let dx = be.hadamard(&asq_col_inv, &be.at_apply(&res.r_primal)?)?;
            let ds = be.sub(&x_inv_rc, &be.hadamard(&theta_inv, &dx)?)?;
            let qdx = be.q_apply(&dx)?;
            let dy_raw = be.sub(&be.add(&res.r_dual, &qdx)?, &ds)?;
            let dy = be.mask_rows(&be.hadamard(&asq_row_inv, &be.a_apply(&dy_raw)?)?)?;
            Ok((Directions { dx, dy, ds }, CgStats { converged: true, ..CgStats::default() }))
        }
    }
}

fn quantize(v: f64, digits: u32) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let mag = v.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits as i32 - 1 - mag);
    (v * scale).round() / scale
}
