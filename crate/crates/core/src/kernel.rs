//! Data sorts, values and terms shared by processes, formulas and equation
//! systems, together with term evaluation and bounded enumeration of
//! quantified variables.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

/// The two data sorts available to models and equation systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    Nat,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => write!(f, "Bool"),
            Sort::Nat => write!(f, "Nat"),
        }
    }
}

/// A closed data value. Naturals have arbitrary width.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Nat(BigUint),
}

impl Value {
    pub fn nat(n: u64) -> Self {
        Value::Nat(BigUint::from(n))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Value::Bool(_) => Sort::Bool,
            Value::Nat(_) => Sort::Nat,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Nat(_) => None,
        }
    }

    pub fn as_nat(&self) -> Option<&BigUint> {
        match self {
            Value::Nat(n) => Some(n),
            Value::Bool(_) => None,
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<u64> for Value {
    fn from(n: u64) -> Self {
        Value::nat(n)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Nat(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("sort mismatch: {0}")]
    SortMismatch(String),
    #[error("quantified variable `{variable}` has no syntactic upper bound")]
    Unbounded { variable: String },
    #[error("enumeration of `{variable}` needs {size} values, cap is {cap}")]
    BoundExceeded {
        variable: String,
        size: BigUint,
        cap: u64,
    },
}

impl EvalError {
    /// True for errors caused by a configured resource limit rather than by
    /// malformed input.
    pub fn is_resource_bound(&self) -> bool {
        matches!(
            self,
            EvalError::Unbounded { .. } | EvalError::BoundExceeded { .. }
        )
    }
}

/// Data expressions over `Bool` and `Nat`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Const(Value),
    Var(String, Sort),
    Eq(Box<Term>, Box<Term>),
    Less(Box<Term>, Box<Term>),
    Plus(Box<Term>, Box<Term>),
    /// Truncating subtraction on naturals.
    Minus(Box<Term>, Box<Term>),
    And(Box<Term>, Box<Term>),
    Or(Box<Term>, Box<Term>),
    Not(Box<Term>),
    Implies(Box<Term>, Box<Term>),
}

impl Term {
    pub fn tt() -> Term {
        Term::Const(Value::Bool(true))
    }

    pub fn ff() -> Term {
        Term::Const(Value::Bool(false))
    }

    pub fn nat(n: u64) -> Term {
        Term::Const(Value::nat(n))
    }

    pub fn var(name: impl Into<String>, sort: Sort) -> Term {
        Term::Var(name.into(), sort)
    }

    pub fn eq(a: Term, b: Term) -> Term {
        Term::Eq(Box::new(a), Box::new(b))
    }

    pub fn less(a: Term, b: Term) -> Term {
        Term::Less(Box::new(a), Box::new(b))
    }

    pub fn plus(a: Term, b: Term) -> Term {
        Term::Plus(Box::new(a), Box::new(b))
    }

    pub fn minus(a: Term, b: Term) -> Term {
        Term::Minus(Box::new(a), Box::new(b))
    }

    pub fn and(a: Term, b: Term) -> Term {
        Term::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Term, b: Term) -> Term {
        Term::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Term) -> Term {
        Term::Not(Box::new(a))
    }

    pub fn implies(a: Term, b: Term) -> Term {
        Term::Implies(Box::new(a), Box::new(b))
    }

    /// Conjunction of all terms, `true` when empty.
    pub fn conjunction(terms: impl IntoIterator<Item = Term>) -> Term {
        terms.into_iter().reduce(Term::and).unwrap_or_else(Term::tt)
    }

    /// Disjunction of all terms, `false` when empty.
    pub fn disjunction(terms: impl IntoIterator<Item = Term>) -> Term {
        terms.into_iter().reduce(Term::or).unwrap_or_else(Term::ff)
    }

    pub fn as_bool_const(&self) -> Option<bool> {
        match self {
            Term::Const(Value::Bool(b)) => Some(*b),
            _ => None,
        }
    }

    /// Computes the sort of a well-sorted term.
    pub fn sort(&self) -> Result<Sort, EvalError> {
        let expect = |t: &Term, s: Sort, op: &str| -> Result<(), EvalError> {
            let found = t.sort()?;
            if found == s {
                Ok(())
            } else {
                Err(EvalError::SortMismatch(format!(
                    "operand `{t}` of {op} has sort {found}, expected {s}"
                )))
            }
        };
        match self {
            Term::Const(v) => Ok(v.sort()),
            Term::Var(_, s) => Ok(*s),
            Term::Eq(a, b) => {
                let sa = a.sort()?;
                expect(b, sa, "==")?;
                Ok(Sort::Bool)
            }
            Term::Less(a, b) => {
                expect(a, Sort::Nat, "<")?;
                expect(b, Sort::Nat, "<")?;
                Ok(Sort::Bool)
            }
            Term::Plus(a, b) | Term::Minus(a, b) => {
                expect(a, Sort::Nat, "arithmetic")?;
                expect(b, Sort::Nat, "arithmetic")?;
                Ok(Sort::Nat)
            }
            Term::And(a, b) | Term::Or(a, b) | Term::Implies(a, b) => {
                expect(a, Sort::Bool, "a logical connective")?;
                expect(b, Sort::Bool, "a logical connective")?;
                Ok(Sort::Bool)
            }
            Term::Not(a) => {
                expect(a, Sort::Bool, "!")?;
                Ok(Sort::Bool)
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Const(_) => {}
            Term::Var(n, _) => {
                out.insert(n.clone());
            }
            Term::Not(a) => a.collect_vars(out),
            Term::Eq(a, b)
            | Term::Less(a, b)
            | Term::Plus(a, b)
            | Term::Minus(a, b)
            | Term::And(a, b)
            | Term::Or(a, b)
            | Term::Implies(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn mentions(&self, var: &str) -> bool {
        match self {
            Term::Const(_) => false,
            Term::Var(n, _) => n == var,
            Term::Not(a) => a.mentions(var),
            Term::Eq(a, b)
            | Term::Less(a, b)
            | Term::Plus(a, b)
            | Term::Minus(a, b)
            | Term::And(a, b)
            | Term::Or(a, b)
            | Term::Implies(a, b) => a.mentions(var) || b.mentions(var),
        }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Term::Const(_) => true,
            Term::Var(..) => false,
            Term::Not(a) => a.is_closed(),
            Term::Eq(a, b)
            | Term::Less(a, b)
            | Term::Plus(a, b)
            | Term::Minus(a, b)
            | Term::And(a, b)
            | Term::Or(a, b)
            | Term::Implies(a, b) => a.is_closed() && b.is_closed(),
        }
    }

    /// Evaluates the term under `env`.
    pub fn eval(&self, env: &DataEnvironment) -> Result<Value, EvalError> {
        match self {
            Term::Const(v) => Ok(v.clone()),
            Term::Var(n, s) => {
                let v = env
                    .get(n)
                    .ok_or_else(|| EvalError::UnboundVariable(n.clone()))?;
                if v.sort() != *s {
                    return Err(EvalError::SortMismatch(format!(
                        "variable `{n}` of sort {s} is bound to {v}"
                    )));
                }
                Ok(v.clone())
            }
            Term::Eq(a, b) => {
                let (x, y) = (a.eval(env)?, b.eval(env)?);
                if x.sort() != y.sort() {
                    return Err(EvalError::SortMismatch(format!(
                        "cannot compare {x} with {y}"
                    )));
                }
                Ok(Value::Bool(x == y))
            }
            Term::Less(a, b) => {
                let (x, y) = (a.eval_nat(env)?, b.eval_nat(env)?);
                Ok(Value::Bool(x < y))
            }
            Term::Plus(a, b) => Ok(Value::Nat(a.eval_nat(env)? + b.eval_nat(env)?)),
            Term::Minus(a, b) => {
                let (x, y) = (a.eval_nat(env)?, b.eval_nat(env)?);
                Ok(Value::Nat(if x > y { x - y } else { BigUint::zero() }))
            }
            Term::And(a, b) => Ok(Value::Bool(a.eval_bool(env)? && b.eval_bool(env)?)),
            Term::Or(a, b) => Ok(Value::Bool(a.eval_bool(env)? || b.eval_bool(env)?)),
            Term::Implies(a, b) => Ok(Value::Bool(!a.eval_bool(env)? || b.eval_bool(env)?)),
            Term::Not(a) => Ok(Value::Bool(!a.eval_bool(env)?)),
        }
    }

    pub fn eval_bool(&self, env: &DataEnvironment) -> Result<bool, EvalError> {
        match self.eval(env)? {
            Value::Bool(b) => Ok(b),
            v => Err(EvalError::SortMismatch(format!(
                "`{self}` evaluated to {v}, expected a Bool"
            ))),
        }
    }

    pub fn eval_nat(&self, env: &DataEnvironment) -> Result<BigUint, EvalError> {
        match self.eval(env)? {
            Value::Nat(n) => Ok(n),
            v => Err(EvalError::SortMismatch(format!(
                "`{self}` evaluated to {v}, expected a Nat"
            ))),
        }
    }

    /// Replaces every occurrence of `var` by `replacement`. Terms have no
    /// binders, so no capture can occur.
    pub fn substitute(&self, var: &str, replacement: &Term) -> Term {
        let sub = |t: &Term| Box::new(t.substitute(var, replacement));
        match self {
            Term::Const(_) => self.clone(),
            Term::Var(n, _) if n == var => replacement.clone(),
            Term::Var(..) => self.clone(),
            Term::Eq(a, b) => Term::Eq(sub(a), sub(b)),
            Term::Less(a, b) => Term::Less(sub(a), sub(b)),
            Term::Plus(a, b) => Term::Plus(sub(a), sub(b)),
            Term::Minus(a, b) => Term::Minus(sub(a), sub(b)),
            Term::And(a, b) => Term::And(sub(a), sub(b)),
            Term::Or(a, b) => Term::Or(sub(a), sub(b)),
            Term::Implies(a, b) => Term::Implies(sub(a), sub(b)),
            Term::Not(a) => Term::Not(sub(a)),
        }
    }

    /// Replaces variables by the values bound in `env`; unbound variables are
    /// kept.
    pub fn substitute_env(&self, env: &DataEnvironment) -> Term {
        env.iter().fold(self.clone(), |t, (name, value)| {
            t.substitute(name, &Term::Const(value.clone()))
        })
    }

    /// Constant folding and Boolean identities. The result is equivalent
    /// under every environment.
    pub fn simplify(&self) -> Term {
        if self.is_closed() {
            if let Ok(v) = self.eval(&DataEnvironment::new()) {
                return Term::Const(v);
            }
        }
        match self {
            Term::And(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (a.as_bool_const(), b.as_bool_const()) {
                    (Some(false), _) | (_, Some(false)) => Term::ff(),
                    (Some(true), _) => b,
                    (_, Some(true)) => a,
                    _ => Term::and(a, b),
                }
            }
            Term::Or(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (a.as_bool_const(), b.as_bool_const()) {
                    (Some(true), _) | (_, Some(true)) => Term::tt(),
                    (Some(false), _) => b,
                    (_, Some(false)) => a,
                    _ => Term::or(a, b),
                }
            }
            Term::Implies(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (a.as_bool_const(), b.as_bool_const()) {
                    (Some(false), _) | (_, Some(true)) => Term::tt(),
                    (Some(true), _) => b,
                    (_, Some(false)) => Term::not(a).simplify(),
                    _ => Term::implies(a, b),
                }
            }
            Term::Not(a) => match a.simplify() {
                Term::Const(Value::Bool(b)) => Term::Const(Value::Bool(!b)),
                Term::Not(inner) => *inner,
                a => Term::not(a),
            },
            Term::Eq(a, b) => Term::eq(a.simplify(), b.simplify()),
            Term::Less(a, b) => Term::less(a.simplify(), b.simplify()),
            Term::Plus(a, b) => Term::plus(a.simplify(), b.simplify()),
            Term::Minus(a, b) => Term::minus(a.simplify(), b.simplify()),
            Term::Const(_) | Term::Var(..) => self.clone(),
        }
    }

    /// The conjuncts of a (possibly nested) conjunction.
    pub fn conjuncts(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                Term::And(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                _ => out.push(t),
            }
        }
        out
    }

    fn precedence(&self) -> u8 {
        match self {
            Term::Implies(..) => 1,
            Term::Or(..) => 2,
            Term::And(..) => 3,
            Term::Not(..) => 4,
            Term::Eq(..) | Term::Less(..) => 5,
            Term::Plus(..) | Term::Minus(..) => 6,
            Term::Const(_) | Term::Var(..) => 7,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prec = self.precedence();
        // `min` is the lowest precedence a child may have without parentheses.
        let child = |f: &mut fmt::Formatter<'_>, t: &Term, min: u8| -> fmt::Result {
            if t.precedence() < min {
                write!(f, "({t})")
            } else {
                write!(f, "{t}")
            }
        };
        let binary =
            |f: &mut fmt::Formatter<'_>, a: &Term, op: &str, b: &Term, lmin: u8, rmin: u8| {
                child(f, a, lmin)?;
                write!(f, " {op} ")?;
                child(f, b, rmin)
            };
        match self {
            Term::Const(v) => write!(f, "{v}"),
            Term::Var(n, _) => write!(f, "{n}"),
            Term::Implies(a, b) => binary(f, a, "=>", b, prec + 1, prec),
            Term::Or(a, b) => binary(f, a, "||", b, prec, prec + 1),
            Term::And(a, b) => binary(f, a, "&&", b, prec, prec + 1),
            Term::Eq(a, b) => binary(f, a, "==", b, prec + 1, prec + 1),
            Term::Less(a, b) => binary(f, a, "<", b, prec + 1, prec + 1),
            Term::Plus(a, b) => binary(f, a, "+", b, prec, prec + 1),
            Term::Minus(a, b) => binary(f, a, "-", b, prec, prec + 1),
            Term::Not(a) => {
                write!(f, "!")?;
                child(f, a, prec)
            }
        }
    }
}

/// An immutable mapping from variable names to values. `update` returns a
/// new environment and leaves the receiver untouched.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct DataEnvironment {
    bindings: Vec<(String, Value)>,
}

impl DataEnvironment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings
            .binary_search_by(|(n, _)| n.as_str().cmp(name))
            .ok()
            .map(|i| &self.bindings[i].1)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    #[must_use]
    pub fn update(&self, name: &str, value: Value) -> Self {
        let mut bindings = self.bindings.clone();
        match bindings.binary_search_by(|(n, _)| n.as_str().cmp(name)) {
            Ok(i) => bindings[i].1 = value,
            Err(i) => bindings.insert(i, (name.to_string(), value)),
        }
        Self { bindings }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.bindings.iter().map(|(n, v)| (n.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

impl<S: Into<String>> FromIterator<(S, Value)> for DataEnvironment {
    fn from_iter<I: IntoIterator<Item = (S, Value)>>(iter: I) -> Self {
        iter.into_iter()
            .fold(DataEnvironment::new(), |env, (n, v)| {
                env.update(&n.into(), v)
            })
    }
}

/// Limits on enumeration and exploration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    /// Maximal number of values a single quantified variable may range over.
    pub quantifier_cap: u64,
    /// Maximal number of vertices (or states) an exploration may create.
    pub max_vertices: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            quantifier_cap: 10_000,
            max_vertices: 10_000_000,
        }
    }
}

/// Enumerates the values of a quantified or summation variable `var`.
///
/// Booleans range over both values. Naturals need a syntactic upper bound
/// among `guards`: a conjunct `var < t`, `!(t < var)` (i.e. `var <= t`) or
/// `var == t` whose other side only mentions variables bound in `env`.
/// Lower bounds of the dual shapes narrow the range further. Values that
/// fail the guard may still be returned; callers evaluate the guard.
pub fn enumerate_values(
    var: &str,
    sort: Sort,
    guards: &[&Term],
    env: &DataEnvironment,
    bounds: &Bounds,
) -> Result<Vec<Value>, EvalError> {
    if sort == Sort::Bool {
        return Ok(vec![Value::Bool(false), Value::Bool(true)]);
    }
    let mut lower = BigUint::zero();
    let mut upper: Option<BigUint> = None;
    let usable = |t: &Term| !t.mentions(var) && t.free_vars().iter().all(|v| env.contains(v));
    let is_var = |t: &Term| matches!(t, Term::Var(n, _) if n == var);
    let mut tighten_upper = |u: BigUint| {
        upper = Some(match upper.take() {
            Some(cur) => cur.min(u),
            None => u,
        });
    };
    let mut lowers = Vec::new();

    for guard in guards {
        for c in guard.conjuncts() {
            match c {
                Term::Less(a, b) if is_var(a) && usable(b) => tighten_upper(b.eval_nat(env)?),
                Term::Less(a, b) if is_var(b) && usable(a) => lowers.push(a.eval_nat(env)? + 1u32),
                Term::Not(inner) => match inner.as_ref() {
                    Term::Less(a, b) if is_var(b) && usable(a) => {
                        tighten_upper(a.eval_nat(env)? + 1u32)
                    }
                    Term::Less(a, b) if is_var(a) && usable(b) => lowers.push(b.eval_nat(env)?),
                    _ => {}
                },
                Term::Eq(a, b) if is_var(a) && usable(b) || is_var(b) && usable(a) => {
                    let other = if is_var(a) { b } else { a };
                    let v = other.eval_nat(env)?;
                    lowers.push(v.clone());
                    tighten_upper(v + 1u32);
                }
                _ => {}
            }
        }
    }
    for l in lowers {
        if l > lower {
            lower = l;
        }
    }
    let upper = upper.ok_or_else(|| EvalError::Unbounded {
        variable: var.to_string(),
    })?;
    let size = match upper.cmp(&lower) {
        Ordering::Greater => &upper - &lower,
        _ => BigUint::zero(),
    };
    if size > BigUint::from(bounds.quantifier_cap) {
        return Err(EvalError::BoundExceeded {
            variable: var.to_string(),
            size,
            cap: bounds.quantifier_cap,
        });
    }
    let mut out = Vec::new();
    let mut v = lower;
    while v < upper {
        out.push(Value::Nat(v.clone()));
        v += BigUint::one();
    }
    Ok(out)
}
