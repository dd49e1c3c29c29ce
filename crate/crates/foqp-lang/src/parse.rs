//! Line-oriented parser for the modeling grammar.
//!
//! ```text
//! var x[3];                              # 3-bit vector, bits x0 (msb) .. x2
//! minimize sum{x : GUARD} EXPR * v(x)
//!        + sum{x, x' : GUARD} EXPR * v(x) * v(x');
//! constraint {y : GUARD}: sum{x : GUARD} EXPR * v(x) >= EXPR;
//! ```
//!
//! Guards use `& | !`, `true`, `false`, `exists z:` / `forall z:` and
//! predicate atoms `P(a, x)`; expressions use `+ - *`, numeric literals and
//! `[GUARD]` indicator brackets. `#` starts a comment.

use crate::ast::*;
use crate::FoqpError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Punct(&'static str),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn error(&self, msg: impl Into<String>) -> FoqpError {
        FoqpError::Parse { line: self.line, col: self.col, msg: msg.into() }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.src.get(self.pos).copied()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, FoqpError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.bump();
                continue;
            }
            if c == b'#' {
                while let Some(c) = self.peek() {
                    if c == b'\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            let (line, col) = (self.line, self.col);
            if c.is_ascii_alphabetic() || c == b'_' {
                // primes are identifier characters: x', and bit refs of
                // primed vectors like x'0
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == b'_' || c == b'\'' {
                        s.push(c as char);
                        self.bump();
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(s), line, col));
                continue;
            }
            if c.is_ascii_digit()
                || (c == b'.' && self.src.get(self.pos + 1).is_some_and(|d| d.is_ascii_digit()))
            {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() || c == b'.' {
                        self.bump();
                    } else if (c == b'e' || c == b'E')
                        && self.src.get(self.pos + 1).is_some_and(|d| {
                            d.is_ascii_digit() || *d == b'-' || *d == b'+'
                        })
                    {
                        self.bump();
                        if matches!(self.peek(), Some(b'-') | Some(b'+')) {
                            self.bump();
                        }
                    } else {
                        break;
                    }
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let v: f64 =
                    text.parse().map_err(|_| self.error(format!("bad number `{text}`")))?;
                out.push((Tok::Number(v), line, col));
                continue;
            }
            // punctuation, longest match first
            let two = &self.src[self.pos..(self.pos + 2).min(self.src.len())];
            let punct: &'static str = match two {
                b">=" => ">=",
                b"==" => "==",
                _ => match c {
                    b'{' => "{",
                    b'}' => "}",
                    b'(' => "(",
                    b')' => ")",
                    b'[' => "[",
                    b']' => "]",
                    b':' => ":",
                    b';' => ";",
                    b',' => ",",
                    b'+' => "+",
                    b'-' => "-",
                    b'*' => "*",
                    b'=' => "=",
                    b'&' => "&",
                    b'|' => "|",
                    b'!' => "!",
                    _ => return Err(self.error(format!("unexpected character `{}`", c as char))),
                },
            };
            self.bump();
            if punct.len() == 2 {
                self.bump();
            }
            out.push((Tok::Punct(punct), line, col));
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn error_at(&self, msg: impl Into<String>) -> FoqpError {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|&(_, l, c)| (l, c))
            .unwrap_or_else(|| self.toks.last().map(|&(_, l, c)| (l, c + 1)).unwrap_or((1, 1)));
        FoqpError::Parse { line, col, msg: msg.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat_punct(&mut self, p: &str) -> Result<(), FoqpError> {
        match self.peek() {
            Some(Tok::Punct(q)) if *q == p => {
                self.pos += 1;
                Ok(())
            }
            other => Err(self.error_at(format!("expected `{p}`, found {}", show(other)))),
        }
    }

    fn at_punct(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, FoqpError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            other => Err(self.error_at(format!("expected identifier, found {}", show(other)))),
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn model(&mut self) -> Result<Foqp, FoqpError> {
        let mut foqp = Foqp::default();
        while self.peek().is_some() {
            if self.keyword("var") {
                let name = self.ident()?;
                self.eat_punct("[")?;
                let width = match self.next() {
                    Some(Tok::Number(v)) if v.fract() == 0.0 && v >= 1.0 => v as usize,
                    _ => return Err(self.error_at("expected bit width")),
                };
                self.eat_punct("]")?;
                self.eat_punct(";")?;
                if foqp.decls.iter().any(|d| d.name == name) {
                    return Err(self.error_at(format!("vector `{name}` declared twice")));
                }
                foqp.decls.push(VarDecl { name, width });
            } else if self.keyword("minimize") {
                loop {
                    self.objective_term(&mut foqp)?;
                    if !self.at_punct("+") {
                        break;
                    }
                }
                self.eat_punct(";")?;
            } else if self.keyword("constraint") {
                let blk = self.constraint()?;
                foqp.constraints.push(blk);
            } else {
                return Err(self.error_at("expected `var`, `minimize` or `constraint`"));
            }
        }
        Ok(foqp)
    }

    fn binder_list(&mut self) -> Result<Vec<String>, FoqpError> {
        let mut names = vec![self.ident()?];
        while self.at_punct(",") {
            names.push(self.ident()?);
        }
        Ok(names)
    }

    fn objective_term(&mut self, foqp: &mut Foqp) -> Result<(), FoqpError> {
        if !self.keyword("sum") {
            return Err(self.error_at("expected `sum`"));
        }
        self.eat_punct("{")?;
        let binders = self.binder_list()?;
        self.eat_punct(":")?;
        let guard = self.guard()?;
        self.eat_punct("}")?;
        let coeff = self.expr()?;
        self.eat_punct("*")?;
        let first = self.v_ref()?;
        if self.at_punct("*") {
            let second = self.v_ref()?;
            if binders.len() != 2 || binders[0] != first || binders[1] != second {
                return Err(self.error_at("quadratic binders must match v(.) * v(.) order"));
            }
            foqp.quad.push(QuadTerm { binder: first, binder2: second, guard, coeff });
        } else {
            if binders.len() != 1 || binders[0] != first {
                return Err(self.error_at("linear binder must match v(.)"));
            }
            foqp.linear.push(LinearTerm { binder: first, guard, coeff });
        }
        Ok(())
    }

    fn v_ref(&mut self) -> Result<String, FoqpError> {
        if !self.keyword("v") {
            return Err(self.error_at("expected `v(`"));
        }
        self.eat_punct("(")?;
        let name = self.ident()?;
        self.eat_punct(")")?;
        Ok(name)
    }

    fn constraint(&mut self) -> Result<ConstraintBlock, FoqpError> {
        self.eat_punct("{")?;
        let row_binders = self.binder_list()?;
        self.eat_punct(":")?;
        let row_guard = self.guard()?;
        self.eat_punct("}")?;
        self.eat_punct(":")?;
        if !self.keyword("sum") {
            return Err(self.error_at("expected `sum`"));
        }
        self.eat_punct("{")?;
        let body_binder = self.ident()?;
        self.eat_punct(":")?;
        let body_guard = self.guard()?;
        self.eat_punct("}")?;
        let coeff = self.expr()?;
        self.eat_punct("*")?;
        let named = self.v_ref()?;
        if named != body_binder {
            return Err(self.error_at("body binder must match v(.)"));
        }
        let sense = match self.next() {
            Some(Tok::Punct(">=")) => Sense::Ge,
            Some(Tok::Punct("=")) | Some(Tok::Punct("==")) => Sense::Eq,
            _ => return Err(self.error_at("expected `>=` or `=`")),
        };
        let rhs = self.expr()?;
        self.eat_punct(";")?;
        Ok(ConstraintBlock { row_binders, row_guard, body_binder, body_guard, coeff, rhs, sense })
    }

    // guard := exists/forall chain over or-expressions
    fn guard(&mut self) -> Result<Formula, FoqpError> {
        if self.keyword("exists") {
            let var = self.ident()?;
            self.eat_punct(":")?;
            let body = self.guard()?;
            return Ok(Formula::Exists(var, Box::new(body)));
        }
        if self.keyword("forall") {
            let var = self.ident()?;
            self.eat_punct(":")?;
            let body = self.guard()?;
            return Ok(Formula::Forall(var, Box::new(body)));
        }
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Formula, FoqpError> {
        let mut f = self.and_expr()?;
        while self.at_punct("|") {
            let g = self.and_expr()?;
            f = Formula::or(f, g);
        }
        Ok(f)
    }

    fn and_expr(&mut self) -> Result<Formula, FoqpError> {
        let mut f = self.unary()?;
        while self.at_punct("&") {
            let g = self.unary()?;
            f = Formula::and(f, g);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, FoqpError> {
        if self.at_punct("!") {
            return Ok(Formula::not(self.unary()?));
        }
        if self.at_punct("(") {
            let f = self.guard()?;
            self.eat_punct(")")?;
            return Ok(f);
        }
        match self.next() {
            Some(Tok::Ident(s)) if s == "true" => Ok(Formula::True),
            Some(Tok::Ident(s)) if s == "false" => Ok(Formula::False),
            Some(Tok::Ident(s)) => {
                if self.at_punct("(") {
                    let mut args = vec![Term::Var(self.ident()?)];
                    while self.at_punct(",") {
                        args.push(Term::Var(self.ident()?));
                    }
                    self.eat_punct(")")?;
                    Ok(Formula::Atom(s, args))
                } else {
                    Ok(Formula::Ref(s))
                }
            }
            other => Err({
                self.pos = self.pos.saturating_sub(1);
                self.error_at(format!("expected guard, found {}", show(other.as_ref())))
            }),
        }
    }

    fn expr(&mut self) -> Result<CoeffExpr, FoqpError> {
        let mut e = self.term()?;
        loop {
            if self.at_punct("+") {
                let t = self.term()?;
                e = CoeffExpr::add(e, t);
            } else if self.at_punct("-") {
                let t = self.term()?;
                e = CoeffExpr::sub(e, t);
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> Result<CoeffExpr, FoqpError> {
        let mut e = self.factor()?;
        loop {
            // `*` is also the coefficient/v separator: stop if `v(` follows.
            let save = self.pos;
            if self.at_punct("*") {
                if matches!(self.peek(), Some(Tok::Ident(s)) if s == "v") {
                    self.pos = save;
                    return Ok(e);
                }
                let f = self.factor()?;
                e = CoeffExpr::mul(e, f);
            } else {
                return Ok(e);
            }
        }
    }

    fn factor(&mut self) -> Result<CoeffExpr, FoqpError> {
        if self.at_punct("-") {
            return Ok(CoeffExpr::Neg(Box::new(self.factor()?)));
        }
        if self.at_punct("[") {
            let g = self.guard()?;
            self.eat_punct("]")?;
            return Ok(CoeffExpr::Indicator(g));
        }
        if self.at_punct("(") {
            let e = self.expr()?;
            self.eat_punct(")")?;
            return Ok(e);
        }
        match self.next() {
            Some(Tok::Number(v)) => Ok(CoeffExpr::Const(v)),
            other => Err({
                self.pos = self.pos.saturating_sub(1);
                self.error_at(format!("expected expression, found {}", show(other.as_ref())))
            }),
        }
    }
}

fn show(t: Option<&Tok>) -> String {
    match t {
        None => "end of input".to_string(),
        Some(Tok::Ident(s)) => format!("`{s}`"),
        Some(Tok::Number(v)) => format!("number {v}"),
        Some(Tok::Punct(p)) => format!("`{p}`"),
    }
}

/// Parses model source into an AST. Errors carry line and column.
pub fn parse(text: &str) -> Result<Foqp, FoqpError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser { toks, pos: 0 };
    let foqp = p.model()?;
    validate(&foqp)?;
    Ok(foqp)
}

fn validate(foqp: &Foqp) -> Result<(), FoqpError> {
    let check = |name: &str| -> Result<(), FoqpError> {
        if foqp.decl_width(name).is_none() {
            return Err(FoqpError::UnknownVector(name.to_string()));
        }
        Ok(())
    };
    for t in &foqp.linear {
        check(&t.binder)?;
    }
    for t in &foqp.quad {
        check(&t.binder)?;
        check(&t.binder2)?;
    }
    for blk in &foqp.constraints {
        for b in &blk.row_binders {
            check(b)?;
        }
        check(&blk.body_binder)?;
    }
    Ok(())
}
