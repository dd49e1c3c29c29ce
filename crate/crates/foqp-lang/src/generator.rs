//! Seeded random program generation, used by the compile/ground equivalence
//! suite and the fuzz-style tests.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ast::*;

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub max_col_bits: usize,
    pub max_row_bits: usize,
    pub max_blocks: usize,
    pub allow_quad: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { max_col_bits: 4, max_row_bits: 4, max_blocks: 3, allow_quad: true }
    }
}

fn random_formula(rng: &mut ChaCha8Rng, bits: &[String], depth: usize) -> Formula {
    if depth == 0 || bits.is_empty() {
        return match rng.gen_range(0..4) {
            0 => Formula::True,
            1 if !bits.is_empty() => Formula::bit(&bits[rng.gen_range(0..bits.len())]),
            1 | 2 => Formula::True,
            _ => Formula::False,
        };
    }
    match rng.gen_range(0..6) {
        0 => Formula::bit(&bits[rng.gen_range(0..bits.len())]),
        1 => Formula::not(random_formula(rng, bits, depth - 1)),
        2 | 3 => Formula::and(
            random_formula(rng, bits, depth - 1),
            random_formula(rng, bits, depth - 1),
        ),
        4 => Formula::or(
            random_formula(rng, bits, depth - 1),
            random_formula(rng, bits, depth - 1),
        ),
        _ => Formula::True,
    }
}

fn random_coeff(rng: &mut ChaCha8Rng, bits: &[String], depth: usize) -> CoeffExpr {
    if depth == 0 {
        // small half-integer constants keep the ground comparison exact
        return CoeffExpr::Const(rng.gen_range(-8..=8) as f64 / 2.0);
    }
    match rng.gen_range(0..6) {
        0 | 1 => CoeffExpr::Const(rng.gen_range(-8..=8) as f64 / 2.0),
        2 => CoeffExpr::Indicator(random_formula(rng, bits, 2)),
        3 => CoeffExpr::add(
            random_coeff(rng, bits, depth - 1),
            random_coeff(rng, bits, depth - 1),
        ),
        4 => CoeffExpr::mul(
            random_coeff(rng, bits, depth - 1),
            random_coeff(rng, bits, depth - 1),
        ),
        _ => CoeffExpr::sub(
            random_coeff(rng, bits, depth - 1),
            random_coeff(rng, bits, depth - 1),
        ),
    }
}

fn bit_names(vec: &str, width: usize) -> Vec<String> {
    (0..width).map(|i| format!("{vec}{i}")).collect()
}

/// A random well-formed, quantifier-free program over an `x` column vector
/// and a `y` row vector.
pub fn random_program(rng: &mut ChaCha8Rng, cfg: &GeneratorConfig) -> Foqp {
    let xw = rng.gen_range(1..=cfg.max_col_bits);
    let yw = rng.gen_range(1..=cfg.max_row_bits);
    let mut foqp = Foqp {
        decls: vec![
            VarDecl { name: "x".into(), width: xw },
            VarDecl { name: "y".into(), width: yw },
        ],
        ..Foqp::default()
    };
    let xbits = bit_names("x", xw);
    let ybits = bit_names("y", yw);
    let xybits: Vec<String> = xbits.iter().chain(ybits.iter()).cloned().collect();

    foqp.linear.push(LinearTerm {
        binder: "x".into(),
        guard: random_formula(rng, &xbits, 2),
        coeff: random_coeff(rng, &xbits, 2),
    });
    if cfg.allow_quad && rng.gen_bool(0.4) {
        let x2bits = bit_names("x'", xw);
        let all: Vec<String> = xbits.iter().chain(x2bits.iter()).cloned().collect();
        foqp.quad.push(QuadTerm {
            binder: "x".into(),
            binder2: "x'".into(),
            guard: random_formula(rng, &all, 2),
            coeff: random_coeff(rng, &all, 1),
        });
    }
    for _ in 0..rng.gen_range(1..=cfg.max_blocks) {
        foqp.constraints.push(ConstraintBlock {
            row_binders: vec!["y".into()],
            row_guard: random_formula(rng, &ybits, 2),
            body_binder: "x".into(),
            body_guard: random_formula(rng, &xybits, 2),
            coeff: random_coeff(rng, &xybits, 2),
            rhs: random_coeff(rng, &ybits, 1),
            sense: if rng.gen_bool(0.7) { Sense::Ge } else { Sense::Eq },
        });
    }
    foqp
}
