use std::collections::HashSet;
use std::fmt;

/// A term inside a finite-domain atom: a domain constant or a logical
/// variable (bound by a quantifier, or naming a sum binder vector).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Const(String),
    Var(String),
}

/// Guard formulas. `Ref` names either a single bit (`x0`, or `x` for 1-bit
/// vectors) and is resolved against the binders in scope at compile time.
/// `Atom` is a finite-domain predicate application, eliminated by
/// propositionalization.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    False,
    Ref(String),
    Atom(String, Vec<Term>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }
    pub fn bit(name: impl Into<String>) -> Formula {
        Formula::Ref(name.into())
    }

    /// Conjunction of bitwise equivalences between two binder vectors.
    pub fn bits_equal(a: &str, b: &str, width: usize) -> Formula {
        let mut f = Formula::True;
        for i in 0..width {
            let an = format!("{a}{i}");
            let bn = format!("{b}{i}");
            let both = Formula::and(Formula::bit(&an), Formula::bit(&bn));
            let neither =
                Formula::and(Formula::not(Formula::bit(&an)), Formula::not(Formula::bit(&bn)));
            let eq = Formula::or(both, neither);
            f = if matches!(f, Formula::True) { eq } else { Formula::and(f, eq) };
        }
        f
    }

    pub fn has_quantifier_or_atom(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Ref(_) => false,
            Formula::Atom(..) | Formula::Exists(..) | Formula::Forall(..) => true,
            Formula::Not(f) => f.has_quantifier_or_atom(),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.has_quantifier_or_atom() || b.has_quantifier_or_atom()
            }
        }
    }
}

/// Coefficient functions: arithmetic over constants and 0/1 indicators of
/// guard formulas, or an explicit table over a list of bits (first bit most
/// significant).
#[derive(Debug, Clone, PartialEq)]
pub enum CoeffExpr {
    Const(f64),
    Indicator(Formula),
    Neg(Box<CoeffExpr>),
    Add(Box<CoeffExpr>, Box<CoeffExpr>),
    Sub(Box<CoeffExpr>, Box<CoeffExpr>),
    Mul(Box<CoeffExpr>, Box<CoeffExpr>),
    Table { bits: Vec<String>, values: Vec<f64> },
}

impl CoeffExpr {
    pub fn add(a: CoeffExpr, b: CoeffExpr) -> CoeffExpr {
        CoeffExpr::Add(Box::new(a), Box::new(b))
    }
    pub fn sub(a: CoeffExpr, b: CoeffExpr) -> CoeffExpr {
        CoeffExpr::Sub(Box::new(a), Box::new(b))
    }
    pub fn mul(a: CoeffExpr, b: CoeffExpr) -> CoeffExpr {
        CoeffExpr::Mul(Box::new(a), Box::new(b))
    }

    pub fn has_quantifier_or_atom(&self) -> bool {
        match self {
            CoeffExpr::Const(_) | CoeffExpr::Table { .. } => false,
            CoeffExpr::Indicator(f) => f.has_quantifier_or_atom(),
            CoeffExpr::Neg(a) => a.has_quantifier_or_atom(),
            CoeffExpr::Add(a, b) | CoeffExpr::Sub(a, b) | CoeffExpr::Mul(a, b) => {
                a.has_quantifier_or_atom() || b.has_quantifier_or_atom()
            }
        }
    }
}

/// Declared bit-vector: `var x[3];`
#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub width: usize,
}

/// `sum{x : guard} coeff * v(x)`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTerm {
    pub binder: String,
    pub guard: Formula,
    pub coeff: CoeffExpr,
}

/// `sum{x,x' : guard} coeff * v(x)*v(x')`
#[derive(Debug, Clone, PartialEq)]
pub struct QuadTerm {
    pub binder: String,
    pub binder2: String,
    pub guard: Formula,
    pub coeff: CoeffExpr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Ge,
    Eq,
}

/// `constraint {y... : psi}: sum{x : phi} a * v(x) >= b;`
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintBlock {
    pub row_binders: Vec<String>,
    pub row_guard: Formula,
    pub body_binder: String,
    pub body_guard: Formula,
    pub coeff: CoeffExpr,
    pub rhs: CoeffExpr,
    pub sense: Sense,
}

/// Abstract syntax of a first-order logical quadratic program.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Foqp {
    pub decls: Vec<VarDecl>,
    pub linear: Vec<LinearTerm>,
    pub quad: Vec<QuadTerm>,
    pub constraints: Vec<ConstraintBlock>,
}

impl Foqp {
    pub fn decl_width(&self, name: &str) -> Option<usize> {
        // A primed name is an implicitly declared copy of its base vector.
        if let Some(base) = name.strip_suffix('\'') {
            return self.decl_width(base);
        }
        self.decls.iter().find(|d| d.name == name).map(|d| d.width)
    }

    pub fn is_quantifier_free(&self) -> bool {
        let guards = self
            .linear
            .iter()
            .map(|t| (&t.guard, &t.coeff))
            .chain(self.quad.iter().map(|t| (&t.guard, &t.coeff)));
        for (g, c) in guards {
            if g.has_quantifier_or_atom() || c.has_quantifier_or_atom() {
                return false;
            }
        }
        for blk in &self.constraints {
            if blk.row_guard.has_quantifier_or_atom()
                || blk.body_guard.has_quantifier_or_atom()
                || blk.coeff.has_quantifier_or_atom()
                || blk.rhs.has_quantifier_or_atom()
            {
                return false;
            }
        }
        true
    }
}

// ---- rendering back to the concrete grammar --------------------------------

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Ref(n) => write!(f, "{n}"),
            Formula::Atom(p, args) => {
                let rendered: Vec<String> = args
                    .iter()
                    .map(|t| match t {
                        Term::Const(c) | Term::Var(c) => c.clone(),
                    })
                    .collect();
                write!(f, "{p}({})", rendered.join(", "))
            }
            Formula::Not(x) => write!(f, "!({x})"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Exists(v, x) => write!(f, "(exists {v}: {x})"),
            Formula::Forall(v, x) => write!(f, "(forall {v}: {x})"),
        }
    }
}

impl fmt::Display for CoeffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffExpr::Const(v) => write!(f, "{v}"),
            CoeffExpr::Indicator(g) => write!(f, "[{g}]"),
            CoeffExpr::Neg(a) => write!(f, "(-{a})"),
            CoeffExpr::Add(a, b) => write!(f, "({a} + {b})"),
            CoeffExpr::Sub(a, b) => write!(f, "({a} - {b})"),
            CoeffExpr::Mul(a, b) => write!(f, "({a} * {b})"),
            CoeffExpr::Table { bits, values } => {
                // Tables have no surface syntax; render as a sum of cube
                // indicators, which parses back to an equivalent expression.
                let k = bits.len();
                let mut parts = Vec::new();
                for (i, v) in values.iter().enumerate() {
                    if *v == 0.0 {
                        continue;
                    }
                    let mut cube = String::new();
                    for (j, b) in bits.iter().enumerate() {
                        if j > 0 {
                            cube.push_str(" & ");
                        }
                        let hi = (i >> (k - 1 - j)) & 1 == 1;
                        if hi {
                            cube.push_str(b);
                        } else {
                            cube.push('!');
                            cube.push_str(b);
                        }
                    }
                    if cube.is_empty() {
                        cube.push_str("true");
                    }
                    parts.push(format!("{v} * [{cube}]"));
                }
                if parts.is_empty() {
                    write!(f, "0")
                } else {
                    write!(f, "({})", parts.join(" + "))
                }
            }
        }
    }
}

impl fmt::Display for Foqp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Primed vectors are implicit; skip duplicates defensively.
        let mut seen = HashSet::new();
        for d in &self.decls {
            if seen.insert(&d.name) {
                writeln!(f, "var {}[{}];", d.name, d.width)?;
            }
        }
        if !self.linear.is_empty() || !self.quad.is_empty() {
            let mut terms = Vec::new();
            for t in &self.linear {
                terms.push(format!("sum{{{} : {}}} {} * v({})", t.binder, t.guard, t.coeff, t.binder));
            }
            for t in &self.quad {
                terms.push(format!(
                    "sum{{{}, {} : {}}} {} * v({}) * v({})",
                    t.binder, t.binder2, t.guard, t.coeff, t.binder, t.binder2
                ));
            }
            writeln!(f, "minimize {};", terms.join(" + "))?;
        }
        for blk in &self.constraints {
            let sense = match blk.sense {
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            writeln!(
                f,
                "constraint {{{} : {}}}: sum{{{} : {}}} {} * v({}) {} {};",
                blk.row_binders.join(", "),
                blk.row_guard,
                blk.body_binder,
                blk.body_guard,
                blk.coeff,
                blk.body_binder,
                sense,
                blk.rhs
            )?;
        }
        Ok(())
    }
}
