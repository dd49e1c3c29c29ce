use crate::backend::IpmBackend;
use crate::normal::NormalOperator;
use crate::precond::Preconditioner;
use crate::IpmError;

#[derive(Debug, Clone, Copy, Default)]
pub struct CgStats {
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
    pub breakdown: bool,
}

/// Conjugate gradients on a symmetric positive definite operator, starting
/// from `x_0 = 0` with `r_0 = rhs`, stopping once the residual norm drops
/// by `reduction` or `max_iter` is hit. With a preconditioner this is the
/// standard preconditioned iteration; with none, every iterate matches the
/// plain method step for step.
///
/// Symbolic backends may compact mid-solve under node pressure; any vector
/// the caller still needs afterwards must be passed via `extra_live` so its
/// handle survives.
///
/// Returns `Err(CgBreakdown)` when `p'Ap <= 0`, which signals lost positive
/// definiteness of the (regularized) system.
pub fn cg_solve<B: IpmBackend>(
    be: &B,
    op: &mut NormalOperator<'_, B>,
    rhs: B::V,
    mut pre: Option<&mut Preconditioner<B>>,
    reduction: f64,
    max_iter: usize,
    extra_live: &mut Vec<&mut B::V>,
) -> Result<(B::V, CgStats), IpmError> {
    let r0_norm = be.norm2(&rhs)?;
    let mut x = be.scale(0.0, &rhs)?;
    if r0_norm == 0.0 {
        return Ok((x, CgStats { converged: true, ..CgStats::default() }));
    }
    let mut r = rhs;
    let mut z = match pre.as_deref() {
        Some(p) => p.apply(be, &r)?,
        None => r.clone(),
    };
    let mut p = z.clone();
    let mut rz = be.dot(&r, &z)?;
    let mut stats = CgStats::default();

    for k in 0..max_iter {
        let ap = op.apply(&p)?;
        let p_ap = be.dot(&p, &ap)?;
        if p_ap <= 0.0 || !p_ap.is_finite() {
            return Err(IpmError::CgBreakdown { p_ap });
        }
        let alpha = rz / p_ap;
        x = be.add(&x, &be.scale(alpha, &p)?)?;
        r = be.sub(&r, &be.scale(alpha, &ap)?)?;
        stats.iterations = k + 1;
        stats.rel_residual = be.norm2(&r)? / r0_norm;
        if stats.rel_residual <= reduction {
            stats.converged = true;
            break;
        }
        z = match pre.as_deref() {
            Some(pcond) => pcond.apply(be, &r)?,
            None => r.clone(),
        };
        let rz_next = be.dot(&r, &z)?;
        let tau = rz_next / rz;
        p = be.add(&z, &be.scale(tau, &p)?)?;
        rz = rz_next;

        if be.should_compact() {
            let mut live: Vec<&mut B::V> = vec![&mut x, &mut r, &mut z, &mut p];
            live.extend(op.live_vectors_mut());
            if let Some(pcond) = pre.as_deref_mut() {
                live.extend(pcond.live_vectors_mut());
            }
            live.extend(extra_live.iter_mut().map(|v| &mut **v));
            be.compact(&mut live)?;
        }
    }
    Ok((x, stats))
}
