//! Quantifier elimination and finite-domain propositionalization, plus a
//! direct formula interpreter used by the grounding path.
//!
//! Existentials become disjunctions over the domain, universals become
//! conjunctions. Ground atoms are closed-world: an atom is true exactly when
//! the database lists it. An atom argument naming a binder vector turns into
//! the disjunction of bit-pattern equalities over the domain elements that
//! satisfy it, so guards like `exists z: Friends(z, x)` compile to the set
//! of encoded individuals with a witness.

use std::collections::HashMap;

use crate::ast::*;
use crate::FoqpError;

/// A set of true ground atoms (closed world).
#[derive(Debug, Clone, Default)]
pub struct Database {
    facts: Vec<(String, Vec<String>)>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pred: impl Into<String>, args: &[&str]) {
        self.facts.push((pred.into(), args.iter().map(|s| s.to_string()).collect()));
    }

    pub fn holds(&self, pred: &str, args: &[String]) -> bool {
        self.facts.iter().any(|(p, a)| p == pred && a == args)
    }
}

/// Encodes domain element `idx` as the bit-equality cube of `binder`'s bits
/// (most significant first).
fn element_cube(binder: &str, width: usize, idx: usize) -> Formula {
    let mut f = Formula::True;
    for b in 0..width {
        let hi = (idx >> (width - 1 - b)) & 1 == 1;
        let bit = Formula::bit(format!("{binder}{b}"));
        let lit = if hi { bit } else { Formula::not(bit) };
        f = if matches!(f, Formula::True) { lit } else { Formula::and(f, lit) };
    }
    f
}

struct Prop<'a> {
    domain: &'a [String],
    db: &'a Database,
    widths: HashMap<String, usize>,
}

impl Prop<'_> {
    fn formula(
        &self,
        f: &Formula,
        bound: &HashMap<String, String>,
    ) -> Result<Formula, FoqpError> {
        Ok(match f {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Ref(n) => Formula::Ref(n.clone()),
            Formula::Not(x) => Formula::not(self.formula(x, bound)?),
            Formula::And(a, b) => Formula::and(self.formula(a, bound)?, self.formula(b, bound)?),
            Formula::Or(a, b) => Formula::or(self.formula(a, bound)?, self.formula(b, bound)?),
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                if self.domain.is_empty() {
                    return Err(FoqpError::UnboundedQuantifier(v.clone()));
                }
                let is_exists = matches!(f, Formula::Exists(..));
                let mut acc: Option<Formula> = None;
                for c in self.domain {
                    let mut inner = bound.clone();
                    inner.insert(v.clone(), c.clone());
                    let g = self.formula(body, &inner)?;
                    acc = Some(match acc {
                        None => g,
                        Some(prev) => {
                            if is_exists {
                                Formula::or(prev, g)
                            } else {
                                Formula::and(prev, g)
                            }
                        }
                    });
                }
                acc.unwrap()
            }
            Formula::Atom(pred, args) => self.atom(pred, args, bound)?,
        })
    }

    fn atom(
        &self,
        pred: &str,
        args: &[Term],
        bound: &HashMap<String, String>,
    ) -> Result<Formula, FoqpError> {
        // Classify arguments: quantifier-bound and domain constants become
        // concrete; binder vectors stay symbolic.
        #[derive(Clone)]
        enum Arg {
            Fixed(String),
            Binder(String, usize),
        }
        let mut classified = Vec::with_capacity(args.len());
        for t in args {
            let name = match t {
                Term::Const(c) | Term::Var(c) => c,
            };
            if let Some(c) = bound.get(name) {
                classified.push(Arg::Fixed(c.clone()));
            } else if self.domain.contains(name) {
                classified.push(Arg::Fixed(name.clone()));
            } else if let Some(&w) = self.widths.get(name) {
                classified.push(Arg::Binder(name.clone(), w));
            } else {
                return Err(FoqpError::UnresolvedAtom(format!("{pred}: argument `{name}`")));
            }
        }
        let binders: Vec<(usize, String, usize)> = classified
            .iter()
            .enumerate()
            .filter_map(|(i, a)| match a {
                Arg::Binder(n, w) => Some((i, n.clone(), *w)),
                Arg::Fixed(_) => None,
            })
            .collect();
        if binders.is_empty() {
            let concrete: Vec<String> = classified
                .iter()
                .map(|a| match a {
                    Arg::Fixed(c) => c.clone(),
                    Arg::Binder(..) => unreachable!(),
                })
                .collect();
            return Ok(if self.db.holds(pred, &concrete) { Formula::True } else { Formula::False });
        }
        // Disjoin over all domain instantiations of the binder arguments
        // that the database satisfies.
        let mut acc = Formula::False;
        let k = binders.len();
        let n = self.domain.len();
        let mut idx = vec![0usize; k];
        loop {
            let mut concrete: Vec<String> = Vec::with_capacity(args.len());
            for a in &classified {
                concrete.push(match a {
                    Arg::Fixed(c) => c.clone(),
                    Arg::Binder(..) => String::new(),
                });
            }
            for (slot, &(argpos, _, _)) in binders.iter().enumerate() {
                concrete[argpos] = self.domain[idx[slot]].clone();
            }
            if self.db.holds(pred, &concrete) {
                let mut cube = Formula::True;
                for (slot, (_, name, width)) in binders.iter().enumerate() {
                    let need = crate::bits_for(n);
                    if *width < need {
                        return Err(FoqpError::WidthMismatch {
                            name: name.clone(),
                            expected: need,
                            got: *width,
                        });
                    }
                    let c = element_cube(name, *width, idx[slot]);
                    cube = if matches!(cube, Formula::True) { c } else { Formula::and(cube, c) };
                }
                acc = if matches!(acc, Formula::False) { cube } else { Formula::or(acc, cube) };
            }
            // advance odometer
            let mut carry = 0;
            loop {
                if carry == k {
                    return Ok(acc);
                }
                idx[carry] += 1;
                if idx[carry] < n {
                    break;
                }
                idx[carry] = 0;
                carry += 1;
            }
        }
    }

    fn coeff(&self, e: &CoeffExpr, bound: &HashMap<String, String>) -> Result<CoeffExpr, FoqpError> {
        Ok(match e {
            CoeffExpr::Const(v) => CoeffExpr::Const(*v),
            CoeffExpr::Table { bits, values } => {
                CoeffExpr::Table { bits: bits.clone(), values: values.clone() }
            }
            CoeffExpr::Indicator(f) => CoeffExpr::Indicator(self.formula(f, bound)?),
            CoeffExpr::Neg(a) => CoeffExpr::Neg(Box::new(self.coeff(a, bound)?)),
            CoeffExpr::Add(a, b) => CoeffExpr::add(self.coeff(a, bound)?, self.coeff(b, bound)?),
            CoeffExpr::Sub(a, b) => CoeffExpr::sub(self.coeff(a, bound)?, self.coeff(b, bound)?),
            CoeffExpr::Mul(a, b) => CoeffExpr::mul(self.coeff(a, bound)?, self.coeff(b, bound)?),
        })
    }
}

/// Eliminates quantifiers and ground atoms from every guard and coefficient.
/// Quantifier-free programs come back structurally unchanged.
pub fn propositionalize(
    foqp: &Foqp,
    domain: &[String],
    db: &Database,
) -> Result<Foqp, FoqpError> {
    let widths: HashMap<String, usize> =
        foqp.decls.iter().map(|d| (d.name.clone(), d.width)).collect();
    let p = Prop { domain, db, widths };
    let empty = HashMap::new();
    let mut out = foqp.clone();
    for t in &mut out.linear {
        t.guard = p.formula(&t.guard, &empty)?;
        t.coeff = p.coeff(&t.coeff, &empty)?;
    }
    for t in &mut out.quad {
        t.guard = p.formula(&t.guard, &empty)?;
        t.coeff = p.coeff(&t.coeff, &empty)?;
    }
    for blk in &mut out.constraints {
        blk.row_guard = p.formula(&blk.row_guard, &empty)?;
        blk.body_guard = p.formula(&blk.body_guard, &empty)?;
        blk.coeff = p.coeff(&blk.coeff, &empty)?;
        blk.rhs = p.coeff(&blk.rhs, &empty)?;
    }
    Ok(out)
}

// ---- direct interpretation (used by the grounding oracle) ------------------

/// Resolves a bit reference against binders in scope: either a bare vector
/// name (width 1) or `name` + decimal bit index. Longest vector name wins.
pub(crate) fn resolve_bit(name: &str, scope: &[(String, usize)]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, usize)> = None; // (scope idx, bit, name len)
    for (i, (vec, width)) in scope.iter().enumerate() {
        if name == vec && *width == 1 {
            if best.map_or(true, |(_, _, l)| vec.len() >= l) {
                best = Some((i, 0, vec.len()));
            }
        } else if let Some(rest) = name.strip_prefix(vec.as_str()) {
            if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                if let Ok(bit) = rest.parse::<usize>() {
                    if bit < *width && best.map_or(true, |(_, _, l)| vec.len() > l) {
                        best = Some((i, bit, vec.len()));
                    }
                }
            }
        }
    }
    best.map(|(i, b, _)| (i, b))
}

/// Evaluates a propositionalized formula under concrete binder assignments.
/// `scope` pairs binder names with widths; `values[i]` holds binder i's bits
/// (most significant first).
pub fn eval_formula(
    f: &Formula,
    scope: &[(String, usize)],
    values: &[Vec<bool>],
) -> Result<bool, FoqpError> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Ref(name) => {
            let (i, b) = resolve_bit(name, scope)
                .ok_or_else(|| FoqpError::UnknownBit(name.clone()))?;
            values[i][b]
        }
        Formula::Not(x) => !eval_formula(x, scope, values)?,
        Formula::And(a, b) => eval_formula(a, scope, values)? && eval_formula(b, scope, values)?,
        Formula::Or(a, b) => eval_formula(a, scope, values)? || eval_formula(b, scope, values)?,
        Formula::Atom(p, _) => return Err(FoqpError::UnresolvedAtom(p.clone())),
        Formula::Exists(v, _) | Formula::Forall(v, _) => {
            return Err(FoqpError::UnboundedQuantifier(v.clone()))
        }
    })
}

/// Evaluates a propositionalized coefficient expression.
pub fn eval_coeff(
    e: &CoeffExpr,
    scope: &[(String, usize)],
    values: &[Vec<bool>],
) -> Result<f64, FoqpError> {
    Ok(match e {
        CoeffExpr::Const(v) => *v,
        CoeffExpr::Indicator(f) => {
            if eval_formula(f, scope, values)? {
                1.0
            } else {
                0.0
            }
        }
        CoeffExpr::Neg(a) => -eval_coeff(a, scope, values)?,
        CoeffExpr::Add(a, b) => eval_coeff(a, scope, values)? + eval_coeff(b, scope, values)?,
        CoeffExpr::Sub(a, b) => eval_coeff(a, scope, values)? - eval_coeff(b, scope, values)?,
        CoeffExpr::Mul(a, b) => eval_coeff(a, scope, values)? * eval_coeff(b, scope, values)?,
        CoeffExpr::Table { bits, values: table } => {
            let mut idx = 0usize;
            for name in bits {
                let (i, b) = resolve_bit(name, scope)
                    .ok_or_else(|| FoqpError::UnknownBit(name.clone()))?;
                idx = (idx << 1) | values[i][b] as usize;
            }
            table.get(idx).copied().unwrap_or(0.0)
        }
    })
}
