use std::time::Duration;

use thiserror::Error;

/// Structural assumption the direction solver relies on.
///
/// The normal-equation reduction needs `(Q + Theta^{-1})^{-1}`, which is
/// only cheap when `Q` is diagonal (separable programs, LPs included). With
/// box constraints (diagonal `A`) the Newton system splits coordinatewise
/// instead, and with bounds only (no equality rows) the inner system is
/// `(Q + Theta^{-1})` itself with `Q` applied matrix-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    SeparableQ,
    BoxConstrained,
    BoundsOnly,
}

/// Inner linear solver for the normal equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerSolve {
    /// Direct factorization when the backend offers one and the system is
    /// small; conjugate gradients otherwise.
    Auto,
    Cg,
    Direct,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Outer stopping rule: max relative KKT residual.
    pub tol: f64,
    /// CG stops when the residual shrinks by this factor.
    pub cg_reduction: f64,
    pub max_outer: usize,
    pub max_cg: usize,
    pub fraction_to_boundary: f64,
    /// Centering: mu_target = sigma * dot(x, s) / n.
    pub sigma: f64,
    pub regularize: bool,
    pub rho_primal: f64,
    pub rho_dual: f64,
    /// Entries of Theta^{-1} are clamped into [1/clip, clip].
    pub theta_clip: f64,
    /// Partial-Cholesky pivots; `None` selects 0, or 50 once the row count
    /// exceeds 4096.
    pub precond_k: Option<usize>,
    pub structure: Option<Structure>,
    /// Round iterate terminals to this many significant digits after each
    /// outer iteration (bounds diagram growth at a small accuracy cost).
    pub quantize_digits: Option<u32>,
    /// Node-count pressure at which symbolic backends compact.
    pub compact_node_limit: usize,
    pub inner: InnerSolve,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-5,
            cg_reduction: 1e-2,
            max_outer: 200,
            max_cg: 2000,
            fraction_to_boundary: 0.995,
            sigma: 0.1,
            regularize: true,
            rho_primal: 1e-8,
            rho_dual: 1e-8,
            theta_clip: 1e12,
            precond_k: None,
            structure: None,
            quantize_digits: None,
            compact_node_limit: 2_000_000,
            inner: InnerSolve::Auto,
        }
    }
}

impl SolveOptions {
    /// Applies one `key=value` pair (the CLI option surface).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), IpmError> {
        let bad = |msg: &str| IpmError::BadOption { key: key.to_string(), msg: msg.to_string() };
        let fval = || value.parse::<f64>().map_err(|_| bad("expected a number"));
        let uval = || value.parse::<usize>().map_err(|_| bad("expected an integer"));
        match key {
            "tol" => self.tol = fval()?,
            "cg_reduction" => self.cg_reduction = fval()?,
            "max_outer" => self.max_outer = uval()?,
            "max_cg" => self.max_cg = uval()?,
            "fraction" => self.fraction_to_boundary = fval()?,
            "sigma" => self.sigma = fval()?,
            "regularize" => {
                self.regularize = value.parse::<bool>().map_err(|_| bad("expected true/false"))?
            }
            "rho_primal" => self.rho_primal = fval()?,
            "rho_dual" => self.rho_dual = fval()?,
            "theta_clip" => self.theta_clip = fval()?,
            "precond_k" => self.precond_k = Some(uval()?),
            "quantize_digits" => self.quantize_digits = Some(uval()? as u32),
            "compact_node_limit" => self.compact_node_limit = uval()?,
            "structure" => {
                self.structure = Some(match value {
                    "separable" => Structure::SeparableQ,
                    "box" => Structure::BoxConstrained,
                    "bounds" => Structure::BoundsOnly,
                    _ => return Err(bad("expected separable|box|bounds")),
                })
            }
            "inner" => {
                self.inner = match value {
                    "auto" => InnerSolve::Auto,
                    "cg" => InnerSolve::Cg,
                    "direct" => InnerSolve::Direct,
                    _ => return Err(bad("expected auto|cg|direct")),
                }
            }
            _ => return Err(bad("unknown option")),
        }
        if self.tol <= 0.0 || self.cg_reduction <= 0.0 {
            return Err(bad("tolerances must be positive"));
        }
        if self.fraction_to_boundary <= 0.0 || self.fraction_to_boundary >= 1.0 {
            return Err(bad("fraction must be in (0,1)"));
        }
        if self.sigma <= 0.0 || self.sigma >= 1.0 {
            return Err(bad("sigma must be in (0,1)"));
        }
        Ok(())
    }

    /// Effective pivot count for a problem with `rows` equality rows.
    pub fn effective_precond_k(&self, rows: usize) -> usize {
        match self.precond_k {
            Some(k) => k,
            None => {
                if rows > 4096 {
                    50
                } else {
                    0
                }
            }
        }
    }
}

/// Diagram statistics of the operands (zero for dense backends).
#[derive(Debug, Clone, Copy, Default)]
pub struct RepStats {
    pub nodes_a: usize,
    pub nodes_q: usize,
    pub nodes_total: usize,
}

/// One outer iteration of the barrier method.
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    pub iter: usize,
    pub mu: f64,
    pub rel_primal: f64,
    pub rel_dual: f64,
    pub rel_comp: f64,
    pub alpha: f64,
    pub cg_iters: usize,
    pub cg_rel_residual: f64,
}

/// Solve outcome: the final iterate, objective, per-iteration history and
/// representation statistics.
#[derive(Debug, Clone)]
pub struct SolveReport<V> {
    pub x: V,
    pub y: V,
    pub s: V,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub cg_total: usize,
    pub history: Vec<IterRecord>,
    pub rep: RepStats,
    pub time_solve: Duration,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IpmError {
    #[error("unsupported problem structure: {0}")]
    UnsupportedStructure(&'static str),

    #[error("conjugate gradient breakdown: p'Ap = {p_ap} (operator lost positive definiteness)")]
    CgBreakdown { p_ap: f64 },

    #[error("iteration limit reached after {iterations} iterations (best residual {best_residual:.3e})")]
    IterationLimit { iterations: usize, best_residual: f64 },

    #[error("zero entry in x or s: singular complementarity scaling")]
    SingularScaling,

    #[error("bad solver option `{key}`: {msg}")]
    BadOption { key: String, msg: String },

    #[error(transparent)]
    Linalg(#[from] add_linalg::LinalgError),

    #[error(transparent)]
    Add(#[from] add_core::AddError),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}
