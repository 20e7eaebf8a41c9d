//! Modal μ-calculus formulas over single action labels.
//!
//! ```text
//! formula ::= ("mu" | "nu") IDENT "." formula | or
//! or      ::= and ( "||" and )*
//! and     ::= unary ( "&&" unary )*
//! unary   ::= "<" IDENT ">" unary | "[" IDENT "]" unary | atom
//! atom    ::= "true" | "false" | IDENT | "(" formula ")" | fixpoint
//! ```
//!
//! A fixpoint extends as far to the right as possible, also when it appears
//! as an operand.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::{ParseError, ParseErrorKind, Parser, Tok};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Fixpoint {
    Mu,
    Nu,
}

impl fmt::Display for Fixpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fixpoint::Mu => "mu",
            Fixpoint::Nu => "nu",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MuFormula {
    Bool(bool),
    Var(String),
    And(Box<MuFormula>, Box<MuFormula>),
    Or(Box<MuFormula>, Box<MuFormula>),
    Box(String, Box<MuFormula>),
    Diamond(String, Box<MuFormula>),
    Fixpoint(Fixpoint, String, Box<MuFormula>),
}

impl MuFormula {
    pub fn var(name: &str) -> Self {
        MuFormula::Var(name.into())
    }

    pub fn and(a: MuFormula, b: MuFormula) -> Self {
        MuFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: MuFormula, b: MuFormula) -> Self {
        MuFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn diamond(label: &str, f: MuFormula) -> Self {
        MuFormula::Diamond(label.into(), Box::new(f))
    }

    pub fn boxed(label: &str, f: MuFormula) -> Self {
        MuFormula::Box(label.into(), Box::new(f))
    }

    pub fn mu(var: &str, f: MuFormula) -> Self {
        MuFormula::Fixpoint(Fixpoint::Mu, var.into(), Box::new(f))
    }

    pub fn nu(var: &str, f: MuFormula) -> Self {
        MuFormula::Fixpoint(Fixpoint::Nu, var.into(), Box::new(f))
    }

    /// Binders in outside-in, left-to-right order.
    pub fn bound_vars_in_order(&self) -> Vec<(Fixpoint, String)> {
        let mut out = Vec::new();
        self.visit_binders(&mut out);
        out
    }

    fn visit_binders(&self, out: &mut Vec<(Fixpoint, String)>) {
        match self {
            MuFormula::Bool(_) | MuFormula::Var(_) => {}
            MuFormula::And(a, b) | MuFormula::Or(a, b) => {
                a.visit_binders(out);
                b.visit_binders(out);
            }
            MuFormula::Box(_, f) | MuFormula::Diamond(_, f) => f.visit_binders(out),
            MuFormula::Fixpoint(s, x, f) => {
                out.push((*s, x.clone()));
                f.visit_binders(out);
            }
        }
    }

    /// Action labels occurring in modalities.
    pub fn labels(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_labels(&mut out);
        out
    }

    fn visit_labels(&self, out: &mut BTreeSet<String>) {
        match self {
            MuFormula::Bool(_) | MuFormula::Var(_) => {}
            MuFormula::And(a, b) | MuFormula::Or(a, b) => {
                a.visit_labels(out);
                b.visit_labels(out);
            }
            MuFormula::Box(l, f) | MuFormula::Diamond(l, f) => {
                out.insert(l.clone());
                f.visit_labels(out);
            }
            MuFormula::Fixpoint(_, _, f) => f.visit_labels(out),
        }
    }

    /// Free fixpoint variables.
    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(f: &MuFormula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match f {
                MuFormula::Bool(_) => {}
                MuFormula::Var(x) => {
                    if !bound.contains(x) {
                        out.insert(x.clone());
                    }
                }
                MuFormula::And(a, b) | MuFormula::Or(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                MuFormula::Box(_, g) | MuFormula::Diamond(_, g) => go(g, bound, out),
                MuFormula::Fixpoint(_, x, g) => {
                    bound.push(x.clone());
                    go(g, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Renames binders so that every fixpoint variable is bound exactly once
    /// in the whole formula. The first binder of a name keeps it; later ones
    /// get a numeric suffix.
    pub fn rename_apart(&self) -> MuFormula {
        fn go(
            f: &MuFormula,
            scope: &mut Vec<(String, String)>,
            used: &mut BTreeSet<String>,
        ) -> MuFormula {
            match f {
                MuFormula::Bool(b) => MuFormula::Bool(*b),
                MuFormula::Var(x) => {
                    let renamed = scope.iter().rev().find(|(from, _)| from == x);
                    MuFormula::Var(renamed.map_or(x.clone(), |(_, to)| to.clone()))
                }
                MuFormula::And(a, b) => MuFormula::and(go(a, scope, used), go(b, scope, used)),
                MuFormula::Or(a, b) => MuFormula::or(go(a, scope, used), go(b, scope, used)),
                MuFormula::Box(l, g) => MuFormula::boxed(l, go(g, scope, used)),
                MuFormula::Diamond(l, g) => MuFormula::diamond(l, go(g, scope, used)),
                MuFormula::Fixpoint(s, x, g) => {
                    let fresh = fresh_name(x, used);
                    used.insert(fresh.clone());
                    scope.push((x.clone(), fresh.clone()));
                    let body = go(g, scope, used);
                    scope.pop();
                    MuFormula::Fixpoint(*s, fresh, Box::new(body))
                }
            }
        }
        go(self, &mut Vec::new(), &mut BTreeSet::new())
    }
}

/// `base` if unused, otherwise `base` with the smallest numeric suffix that is.
pub(crate) fn fresh_name(base: &str, used: &BTreeSet<String>) -> String {
    if !used.contains(base) {
        return base.to_string();
    }
    (1..)
        .map(|k| format!("{base}{k}"))
        .find(|c| !used.contains(c))
        .expect("unbounded suffix range")
}

/// Parses a closed formula and renames its binders apart.
pub fn parse_formula(text: &str) -> Result<MuFormula, ParseError> {
    let mut p = Parser::new(text)?;
    let mut scope = Vec::new();
    let f = formula(&mut p, &mut scope)?;
    p.expect_eof()?;
    Ok(f.rename_apart())
}

fn formula(p: &mut Parser, scope: &mut Vec<String>) -> Result<MuFormula, ParseError> {
    if p.at_keyword("mu") || p.at_keyword("nu") {
        return fixpoint(p, scope);
    }
    or_formula(p, scope)
}

fn fixpoint(p: &mut Parser, scope: &mut Vec<String>) -> Result<MuFormula, ParseError> {
    let sigma = if p.eat_keyword("mu") {
        Fixpoint::Mu
    } else {
        p.expect_keyword("nu")?;
        Fixpoint::Nu
    };
    let var = p.expect_ident()?;
    p.expect(&Tok::Dot)?;
    scope.push(var.clone());
    let body = formula(p, scope);
    scope.pop();
    Ok(MuFormula::Fixpoint(sigma, var, Box::new(body?)))
}

fn or_formula(p: &mut Parser, scope: &mut Vec<String>) -> Result<MuFormula, ParseError> {
    let mut f = and_formula(p, scope)?;
    while p.eat(&Tok::OrOr) {
        f = MuFormula::or(f, and_formula(p, scope)?);
    }
    Ok(f)
}

fn and_formula(p: &mut Parser, scope: &mut Vec<String>) -> Result<MuFormula, ParseError> {
    let mut f = unary(p, scope)?;
    while p.eat(&Tok::AndAnd) {
        f = MuFormula::and(f, unary(p, scope)?);
    }
    Ok(f)
}

fn unary(p: &mut Parser, scope: &mut Vec<String>) -> Result<MuFormula, ParseError> {
    if p.eat(&Tok::Lt) {
        let label = p.expect_ident()?;
        p.expect(&Tok::Gt)?;
        return Ok(MuFormula::diamond(&label, unary(p, scope)?));
    }
    if p.eat(&Tok::LBrack) {
        let label = p.expect_ident()?;
        p.expect(&Tok::RBrack)?;
        return Ok(MuFormula::boxed(&label, unary(p, scope)?));
    }
    atom(p, scope)
}

fn atom(p: &mut Parser, scope: &mut Vec<String>) -> Result<MuFormula, ParseError> {
    if p.at_keyword("mu") || p.at_keyword("nu") {
        return fixpoint(p, scope);
    }
    if p.eat_keyword("true") {
        return Ok(MuFormula::Bool(true));
    }
    if p.eat_keyword("false") {
        return Ok(MuFormula::Bool(false));
    }
    if p.eat(&Tok::LParen) {
        let f = formula(p, scope)?;
        p.expect(&Tok::RParen)?;
        return Ok(f);
    }
    if let Tok::Ident(name) = p.peek().clone() {
        if !scope.contains(&name) {
            return Err(p.error(ParseErrorKind::OpenFormula(name)));
        }
        p.next();
        return Ok(MuFormula::Var(name));
    }
    p.syntax(format!("expected a formula, found {}", p.peek()))
}

impl MuFormula {
    fn level(&self) -> u8 {
        match self {
            MuFormula::Fixpoint(..) => 0,
            MuFormula::Or(..) => 1,
            MuFormula::And(..) => 2,
            MuFormula::Box(..) | MuFormula::Diamond(..) => 3,
            MuFormula::Bool(_) | MuFormula::Var(_) => 4,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        // Fixpoints in operand position are always parenthesized.
        if self.level() < min {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            MuFormula::Bool(b) => write!(f, "{b}"),
            MuFormula::Var(x) => write!(f, "{x}"),
            MuFormula::Or(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " || ")?;
                b.fmt_at(f, 2)
            }
            MuFormula::And(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, " && ")?;
                b.fmt_at(f, 3)
            }
            MuFormula::Diamond(l, g) => {
                write!(f, "<{l}> ")?;
                g.fmt_at(f, 3)
            }
            MuFormula::Box(l, g) => {
                write!(f, "[{l}] ")?;
                g.fmt_at(f, 3)
            }
            MuFormula::Fixpoint(s, x, g) => {
                write!(f, "{s} {x} . ")?;
                g.fmt_at(f, 0)
            }
        }
    }
}

impl fmt::Display for MuFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}
