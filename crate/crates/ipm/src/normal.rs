use crate::backend::IpmBackend;
use crate::IpmError;

/// The inner-system operator the conjugate gradient method runs on.
///
/// For the normal-equation path this is `w -> A D A^T w + rho_d w` with
/// `D = (Q + Theta^{-1} + rho_p I)^{-1}` held as a diagonal; for
/// bounds-only programs it is `w -> Q w + (Theta^{-1} + rho_p) . w` with
/// `Q` applied matrix-free.
pub enum OperatorKind {
    NormalEquation,
    BoundsOnly,
}

pub struct NormalOperator<'a, B: IpmBackend> {
    pub(crate) be: &'a B,
    pub(crate) kind: OperatorKind,
    /// NormalEquation: the sandwiched diagonal D. BoundsOnly: the additive
    /// diagonal Theta^{-1} + rho_p.
    pub(crate) diag: B::V,
    pub(crate) rho_dual: f64,
    pub applies: usize,
}

impl<'a, B: IpmBackend> NormalOperator<'a, B> {
    pub fn normal_equation(be: &'a B, d: B::V, rho_dual: f64) -> Self {
        NormalOperator { be, kind: OperatorKind::NormalEquation, diag: d, rho_dual, applies: 0 }
    }

    pub fn bounds_only(be: &'a B, additive_diag: B::V) -> Self {
        NormalOperator {
            be,
            kind: OperatorKind::BoundsOnly,
            diag: additive_diag,
            rho_dual: 0.0,
            applies: 0,
        }
    }

    pub fn apply(&mut self, w: &B::V) -> Result<B::V, IpmError> {
        self.applies += 1;
        let be = self.be;
        match self.kind {
            OperatorKind::NormalEquation => {
                let atw = be.at_apply(w)?;
                let scaled = be.hadamard(&self.diag, &atw)?;
                let sandwich = be.a_apply(&scaled)?;
                if self.rho_dual == 0.0 {
                    Ok(sandwich)
                } else {
                    be.add(&sandwich, &be.scale(self.rho_dual, w)?)
                }
            }
            OperatorKind::BoundsOnly => {
                let qw = be.q_apply(w)?;
                be.add(&qw, &be.hadamard(&self.diag, w)?)
            }
        }
    }

    pub(crate) fn live_vectors_mut(&mut self) -> Vec<&mut B::V> {
        vec![&mut self.diag]
    }
}
