//! Parameterised Boolean equation systems: syntax, semantics, ranks and a
//! naive solver.
//!
//! The textual dump has one equation per line followed by the initial
//! instance:
//!
//! ```text
//! mu X(s: Nat) = (exists n: Nat . val(s == 1 && 0 < n < 3) && X(s + n)) || Y(s);
//! nu Y(s: Nat) = val(s == 3) && Y(s);
//! init X(1);
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::formula::{fresh_name, Fixpoint};
use crate::kernel::{enumerate_values, Bounds, DataEnvironment, EvalError, Sort, Term, Value};
use crate::syntax::{ParseError, ParseErrorKind, Parser, Scope, Tok};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PredicateFormula {
    Data(Term),
    Call(String, Vec<Term>),
    And(Box<PredicateFormula>, Box<PredicateFormula>),
    Or(Box<PredicateFormula>, Box<PredicateFormula>),
    Exists(String, Sort, Box<PredicateFormula>),
    Forall(String, Sort, Box<PredicateFormula>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub fixpoint: Fixpoint,
    pub variable: String,
    pub parameters: Vec<(String, Sort)>,
    pub rhs: PredicateFormula,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pbes {
    pub equations: Vec<Equation>,
    pub initial: Instance,
}

/// A predicate variable applied to concrete values, `X(v)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Instance {
    pub variable: String,
    pub arguments: Vec<Value>,
}

/// A total assignment of truth values to instances: an explicit map plus a
/// default for everything not listed.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PredicateEnvironment {
    pub explicit: BTreeMap<Instance, bool>,
    pub default: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PbesError {
    #[error("unknown predicate variable `{0}`")]
    UnknownVariable(String),
    #[error("predicate variable `{0}` has more than one defining equation")]
    DuplicateEquation(String),
    #[error("call to `{variable}` has {found} arguments, expected {expected}")]
    Arity {
        variable: String,
        expected: usize,
        found: usize,
    },
    #[error("argument {index} of a call to `{variable}` has the wrong sort")]
    ArgumentSort { variable: String, index: usize },
    #[error("data variable `{name}` is free in the equation for `{variable}`")]
    FreeDataVariable { variable: String, name: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("more than {limit} instances are reachable")]
    StateExplosion { limit: usize },
}

impl PbesError {
    pub fn is_resource_bound(&self) -> bool {
        match self {
            PbesError::Eval(e) => e.is_resource_bound(),
            PbesError::StateExplosion { .. } => true,
            _ => false,
        }
    }
}

impl Instance {
    pub fn new(variable: impl Into<String>, arguments: Vec<Value>) -> Self {
        Self {
            variable: variable.into(),
            arguments,
        }
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.variable)?;
        if !self.arguments.is_empty() {
            let args: Vec<String> = self.arguments.iter().map(|v| v.to_string()).collect();
            write!(f, "({})", args.join(", "))?;
        }
        Ok(())
    }
}

impl PredicateEnvironment {
    pub fn with_default(default: bool) -> Self {
        Self {
            explicit: BTreeMap::new(),
            default,
        }
    }

    pub fn get(&self, instance: &Instance) -> bool {
        self.explicit.get(instance).copied().unwrap_or(self.default)
    }

    pub fn set(&mut self, instance: Instance, value: bool) {
        self.explicit.insert(instance, value);
    }
}

impl PredicateFormula {
    pub fn tt() -> Self {
        PredicateFormula::Data(Term::tt())
    }

    pub fn ff() -> Self {
        PredicateFormula::Data(Term::ff())
    }

    pub fn call(variable: &str, args: Vec<Term>) -> Self {
        PredicateFormula::Call(variable.into(), args)
    }

    pub fn and(a: Self, b: Self) -> Self {
        PredicateFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Self, b: Self) -> Self {
        PredicateFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(var: &str, sort: Sort, body: Self) -> Self {
        PredicateFormula::Exists(var.into(), sort, Box::new(body))
    }

    pub fn forall(var: &str, sort: Sort, body: Self) -> Self {
        PredicateFormula::Forall(var.into(), sort, Box::new(body))
    }

    /// Right-nested conjunction; `true` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = Self>) -> Self {
        let mut items: Vec<Self> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Self::tt();
        };
        while let Some(f) = items.pop() {
            acc = Self::and(f, acc);
        }
        acc
    }

    /// Right-nested disjunction; `false` when empty.
    pub fn disjunction(items: impl IntoIterator<Item = Self>) -> Self {
        let mut items: Vec<Self> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Self::ff();
        };
        while let Some(f) = items.pop() {
            acc = Self::or(f, acc);
        }
        acc
    }

    pub fn as_bool_const(&self) -> Option<bool> {
        match self {
            PredicateFormula::Data(t) => t.as_bool_const(),
            _ => None,
        }
    }

    pub fn free_data_vars(&self) -> BTreeSet<String> {
        match self {
            PredicateFormula::Data(t) => t.free_vars(),
            PredicateFormula::Call(_, args) => args.iter().flat_map(|a| a.free_vars()).collect(),
            PredicateFormula::And(a, b) | PredicateFormula::Or(a, b) => {
                let mut out = a.free_data_vars();
                out.extend(b.free_data_vars());
                out
            }
            PredicateFormula::Exists(x, _, f) | PredicateFormula::Forall(x, _, f) => {
                let mut out = f.free_data_vars();
                out.remove(x);
                out
            }
        }
    }

    /// Predicate variables occurring in calls.
    pub fn occurring_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_calls(&mut |x, _| {
            out.insert(x.to_string());
        });
        out
    }

    pub fn visit_calls(&self, f: &mut dyn FnMut(&str, &[Term])) {
        match self {
            PredicateFormula::Data(_) => {}
            PredicateFormula::Call(x, args) => f(x, args),
            PredicateFormula::And(a, b) | PredicateFormula::Or(a, b) => {
                a.visit_calls(f);
                b.visit_calls(f);
            }
            PredicateFormula::Exists(_, _, g) | PredicateFormula::Forall(_, _, g) => {
                g.visit_calls(f)
            }
        }
    }

    /// Capture-avoiding substitution of a term for a free data variable.
    pub fn substitute(&self, var: &str, replacement: &Term) -> Self {
        match self {
            PredicateFormula::Data(t) => PredicateFormula::Data(t.substitute(var, replacement)),
            PredicateFormula::Call(x, args) => PredicateFormula::Call(
                x.clone(),
                args.iter()
                    .map(|a| a.substitute(var, replacement))
                    .collect(),
            ),
            PredicateFormula::And(a, b) => Self::and(
                a.substitute(var, replacement),
                b.substitute(var, replacement),
            ),
            PredicateFormula::Or(a, b) => Self::or(
                a.substitute(var, replacement),
                b.substitute(var, replacement),
            ),
            PredicateFormula::Exists(x, s, f) | PredicateFormula::Forall(x, s, f) => {
                let universal = matches!(self, PredicateFormula::Forall(..));
                let (x, body) = if x == var {
                    (x.clone(), (**f).clone())
                } else if replacement.mentions(x) {
                    let mut used = f.free_data_vars();
                    used.extend(replacement.free_vars());
                    used.insert(var.to_string());
                    let fresh = fresh_name(x, &used);
                    let renamed = f.substitute(x, &Term::var(&fresh, *s));
                    (fresh, renamed.substitute(var, replacement))
                } else {
                    (x.clone(), f.substitute(var, replacement))
                };
                if universal {
                    Self::forall(&x, *s, body)
                } else {
                    Self::exists(&x, *s, body)
                }
            }
        }
    }

    /// Simultaneous substitution of closed values.
    pub fn substitute_env(&self, env: &DataEnvironment) -> Self {
        env.iter().fold(self.clone(), |f, (name, value)| {
            f.substitute(name, &Term::Const(value.clone()))
        })
    }

    /// Replaces calls for which `f` returns a formula.
    pub fn map_calls(&self, f: &mut dyn FnMut(&str, &[Term]) -> Option<Self>) -> Self {
        match self {
            PredicateFormula::Data(_) => self.clone(),
            PredicateFormula::Call(x, args) => f(x, args).unwrap_or_else(|| self.clone()),
            PredicateFormula::And(a, b) => Self::and(a.map_calls(f), b.map_calls(f)),
            PredicateFormula::Or(a, b) => Self::or(a.map_calls(f), b.map_calls(f)),
            PredicateFormula::Exists(x, s, g) => Self::exists(x, *s, g.map_calls(f)),
            PredicateFormula::Forall(x, s, g) => Self::forall(x, *s, g.map_calls(f)),
        }
    }

    /// Constant folding: Boolean identities, constant data atoms, and
    /// quantifiers whose variable does not occur in the body.
    pub fn simplify(&self) -> Self {
        match self {
            PredicateFormula::Data(t) => PredicateFormula::Data(t.simplify()),
            PredicateFormula::Call(x, args) => {
                PredicateFormula::Call(x.clone(), args.iter().map(Term::simplify).collect())
            }
            PredicateFormula::And(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (a.as_bool_const(), b.as_bool_const()) {
                    (Some(false), _) | (_, Some(false)) => Self::ff(),
                    (Some(true), _) => b,
                    (_, Some(true)) => a,
                    _ => Self::and(a, b),
                }
            }
            PredicateFormula::Or(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (a.as_bool_const(), b.as_bool_const()) {
                    (Some(true), _) | (_, Some(true)) => Self::tt(),
                    (Some(false), _) => b,
                    (_, Some(false)) => a,
                    _ => Self::or(a, b),
                }
            }
            PredicateFormula::Exists(x, s, f) | PredicateFormula::Forall(x, s, f) => {
                let body = f.simplify();
                // Both sorts are non-empty, so a vacuous quantifier is dropped.
                if !body.free_data_vars().contains(x) {
                    return body;
                }
                if matches!(self, PredicateFormula::Forall(..)) {
                    Self::forall(x, *s, body)
                } else {
                    Self::exists(x, *s, body)
                }
            }
        }
    }

    /// Data atoms that bound the range of a quantified variable: the data
    /// conjuncts under `exists`, the negated data disjuncts under `forall`.
    pub(crate) fn quantifier_guards(body: &Self, universal: bool) -> Vec<Term> {
        let mut out = Vec::new();
        let mut stack = vec![body];
        while let Some(f) = stack.pop() {
            match (f, universal) {
                (PredicateFormula::And(a, b), false) | (PredicateFormula::Or(a, b), true) => {
                    stack.push(b);
                    stack.push(a);
                }
                (PredicateFormula::Data(t), false) => out.push(t.clone()),
                (PredicateFormula::Data(Term::Not(t)), true) => out.push((**t).clone()),
                (PredicateFormula::Data(t), true) => out.push(Term::not(t.clone())),
                _ => {}
            }
        }
        out
    }

    /// The candidate values of a quantified variable in context `env`.
    pub fn quantifier_range(
        var: &str,
        sort: Sort,
        body: &Self,
        universal: bool,
        env: &DataEnvironment,
        bounds: &Bounds,
    ) -> Result<Vec<Value>, EvalError> {
        let guards = Self::quantifier_guards(body, universal);
        let refs: Vec<&Term> = guards.iter().collect();
        enumerate_values(var, sort, &refs, env, bounds)
    }
}

/// Evaluates a predicate formula clause by clause; quantifiers range over
/// the enumerable candidates, which is exact because values outside the
/// candidate range falsify an `exists` guard and satisfy a `forall` guard.
pub fn eval_predicate_formula(
    phi: &PredicateFormula,
    eta: &PredicateEnvironment,
    delta: &DataEnvironment,
    bounds: &Bounds,
) -> Result<bool, EvalError> {
    match phi {
        PredicateFormula::Data(t) => t.eval_bool(delta),
        PredicateFormula::Call(x, args) => {
            let arguments = args
                .iter()
                .map(|a| a.eval(delta))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(eta.get(&Instance::new(x.clone(), arguments)))
        }
        PredicateFormula::And(a, b) => Ok(eval_predicate_formula(a, eta, delta, bounds)?
            && eval_predicate_formula(b, eta, delta, bounds)?),
        PredicateFormula::Or(a, b) => Ok(eval_predicate_formula(a, eta, delta, bounds)?
            || eval_predicate_formula(b, eta, delta, bounds)?),
        PredicateFormula::Exists(x, s, f) | PredicateFormula::Forall(x, s, f) => {
            let universal = matches!(phi, PredicateFormula::Forall(..));
            for v in PredicateFormula::quantifier_range(x, *s, f, universal, delta, bounds)? {
                let holds = eval_predicate_formula(f, eta, &delta.update(x, v), bounds)?;
                if holds != universal {
                    return Ok(!universal);
                }
            }
            Ok(universal)
        }
    }
}

impl Equation {
    pub fn parameter_env(&self, arguments: &[Value]) -> DataEnvironment {
        self.parameters
            .iter()
            .zip(arguments)
            .map(|((name, _), v)| (name.as_str(), v.clone()))
            .collect()
    }
}

impl Pbes {
    pub fn equation(&self, variable: &str) -> Option<&Equation> {
        self.equations.iter().find(|e| e.variable == variable)
    }

    pub fn equation_index(&self) -> HashMap<&str, usize> {
        self.equations
            .iter()
            .enumerate()
            .map(|(i, e)| (e.variable.as_str(), i))
            .collect()
    }

    /// bnd(E)
    pub fn bound_variables(&self) -> BTreeSet<String> {
        self.equations.iter().map(|e| e.variable.clone()).collect()
    }

    /// occ(E)
    pub fn occurring_variables(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self
            .equations
            .iter()
            .flat_map(|e| e.rhs.occurring_variables())
            .collect();
        out.insert(self.initial.variable.clone());
        out
    }

    /// Ranks of all equations, in equation order: minimal, non-decreasing,
    /// even exactly for greatest fixpoints.
    pub fn ranks(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.equations.len());
        let mut current: Option<(Fixpoint, u32)> = None;
        for e in &self.equations {
            let r = match current {
                None => u32::from(e.fixpoint == Fixpoint::Mu),
                Some((s, r)) if s == e.fixpoint => r,
                Some((_, r)) => r + 1,
            };
            current = Some((e.fixpoint, r));
            out.push(r);
        }
        out
    }

    pub fn rank(&self, variable: &str) -> Result<u32, PbesError> {
        let i = self
            .equations
            .iter()
            .position(|e| e.variable == variable)
            .ok_or_else(|| PbesError::UnknownVariable(variable.into()))?;
        Ok(self.ranks()[i])
    }

    pub fn rank_map(&self) -> BTreeMap<String, u32> {
        self.equations
            .iter()
            .zip(self.ranks())
            .map(|(e, r)| (e.variable.clone(), r))
            .collect()
    }

    /// Well-formedness and closedness: one equation per bound variable,
    /// every call targets a bound variable with matching arity and sorts,
    /// and right-hand sides mention only their own parameters.
    pub fn check(&self) -> Result<(), PbesError> {
        let mut seen = BTreeSet::new();
        for e in &self.equations {
            if !seen.insert(e.variable.as_str()) {
                return Err(PbesError::DuplicateEquation(e.variable.clone()));
            }
        }
        let check_call = |x: &str, sorts: &[Sort]| -> Result<(), PbesError> {
            let eq = self
                .equation(x)
                .ok_or_else(|| PbesError::UnknownVariable(x.into()))?;
            if eq.parameters.len() != sorts.len() {
                return Err(PbesError::Arity {
                    variable: x.into(),
                    expected: eq.parameters.len(),
                    found: sorts.len(),
                });
            }
            for (index, ((_, want), got)) in eq.parameters.iter().zip(sorts).enumerate() {
                if want != got {
                    return Err(PbesError::ArgumentSort {
                        variable: x.into(),
                        index,
                    });
                }
            }
            Ok(())
        };
        for e in &self.equations {
            let params: BTreeSet<&str> = e.parameters.iter().map(|(n, _)| n.as_str()).collect();
            if let Some(name) = e
                .rhs
                .free_data_vars()
                .into_iter()
                .find(|n| !params.contains(n.as_str()))
            {
                return Err(PbesError::FreeDataVariable {
                    variable: e.variable.clone(),
                    name,
                });
            }
            let mut result = Ok(());
            e.rhs.visit_calls(&mut |x, args| {
                if result.is_ok() {
                    let sorts: Result<Vec<Sort>, EvalError> = args.iter().map(Term::sort).collect();
                    result = sorts
                        .map_err(PbesError::from)
                        .and_then(|sorts| check_call(x, &sorts));
                }
            });
            result?;
        }
        let init_sorts: Vec<Sort> = self.initial.arguments.iter().map(Value::sort).collect();
        check_call(&self.initial.variable, &init_sorts)
    }
}

/// Partial evaluation of a right-hand side: either a constant or the set of
/// instances it still depends on after constant folding.
enum Reach {
    Const(bool),
    Depends(Vec<Instance>),
}

fn reach(
    phi: &PredicateFormula,
    delta: &DataEnvironment,
    bounds: &Bounds,
) -> Result<Reach, EvalError> {
    let combine = |parts: Vec<Reach>, conjunctive: bool| {
        let mut deps = Vec::new();
        for p in parts {
            match p {
                Reach::Const(b) if b != conjunctive => return Reach::Const(b),
                Reach::Const(_) => {}
                Reach::Depends(d) => deps.extend(d),
            }
        }
        if deps.is_empty() {
            Reach::Const(conjunctive)
        } else {
            Reach::Depends(deps)
        }
    };
    Ok(match phi {
        PredicateFormula::Data(t) => Reach::Const(t.eval_bool(delta)?),
        PredicateFormula::Call(x, args) => {
            let arguments = args
                .iter()
                .map(|a| a.eval(delta))
                .collect::<Result<Vec<_>, _>>()?;
            Reach::Depends(vec![Instance::new(x.clone(), arguments)])
        }
        PredicateFormula::And(a, b) => combine(
            vec![reach(a, delta, bounds)?, reach(b, delta, bounds)?],
            true,
        ),
        PredicateFormula::Or(a, b) => combine(
            vec![reach(a, delta, bounds)?, reach(b, delta, bounds)?],
            false,
        ),
        PredicateFormula::Exists(x, s, f) | PredicateFormula::Forall(x, s, f) => {
            let universal = matches!(phi, PredicateFormula::Forall(..));
            let mut parts = Vec::new();
            for v in PredicateFormula::quantifier_range(x, *s, f, universal, delta, bounds)? {
                parts.push(reach(f, &delta.update(x, v), bounds)?);
            }
            combine(parts, universal)
        }
    })
}

/// Solves `p` by nested fixpoint iteration over the instances reachable from
/// the initial instance. Unreached instances map to the default `false`.
pub fn brute_force_solve(p: &Pbes, bounds: &Bounds) -> Result<PredicateEnvironment, PbesError> {
    let index = p.equation_index();
    let lookup = |x: &str| {
        index
            .get(x)
            .copied()
            .ok_or_else(|| PbesError::UnknownVariable(x.into()))
    };

    // Discovery.
    let mut instances = vec![p.initial.clone()];
    let mut known: BTreeSet<Instance> = BTreeSet::from([p.initial.clone()]);
    let mut queue = VecDeque::from([p.initial.clone()]);
    while let Some(inst) = queue.pop_front() {
        let eq = &p.equations[lookup(&inst.variable)?];
        let delta = eq.parameter_env(&inst.arguments);
        if let Reach::Depends(deps) = reach(&eq.rhs, &delta, bounds)? {
            for d in deps {
                lookup(&d.variable)?;
                if known.insert(d.clone()) {
                    if known.len() > bounds.max_vertices {
                        return Err(PbesError::StateExplosion {
                            limit: bounds.max_vertices,
                        });
                    }
                    instances.push(d.clone());
                    queue.push_back(d);
                }
            }
        }
    }

    // Blocks of equal rank, outermost first.
    let ranks = p.ranks();
    let max_rank = ranks.iter().copied().max().unwrap_or(0);
    let min_rank = ranks.iter().copied().min().unwrap_or(0);
    let mut blocks: Vec<Vec<Instance>> = vec![Vec::new(); (max_rank - min_rank + 1) as usize];
    for inst in &instances {
        let r = ranks[lookup(&inst.variable)?];
        blocks[(r - min_rank) as usize].push(inst.clone());
    }
    let blocks: Vec<(bool, Vec<Instance>)> = blocks
        .into_iter()
        .enumerate()
        .filter(|(_, b)| !b.is_empty())
        .map(|(i, b)| ((i as u32 + min_rank).is_multiple_of(2), b))
        .collect();

    let mut eta = PredicateEnvironment::with_default(false);
    solve_block(p, &index, &blocks, 0, &mut eta, bounds)?;
    Ok(eta)
}

fn solve_block(
    p: &Pbes,
    index: &HashMap<&str, usize>,
    blocks: &[(bool, Vec<Instance>)],
    level: usize,
    eta: &mut PredicateEnvironment,
    bounds: &Bounds,
) -> Result<(), PbesError> {
    let Some((greatest, block)) = blocks.get(level) else {
        return Ok(());
    };
    for inst in block {
        eta.set(inst.clone(), *greatest);
    }
    loop {
        solve_block(p, index, blocks, level + 1, eta, bounds)?;
        let mut changed = false;
        // Chaotic iteration within the block until it is locally stable.
        loop {
            let mut round = false;
            for inst in block {
                let eq = &p.equations[index[inst.variable.as_str()]];
                let value = eval_predicate_formula(
                    &eq.rhs,
                    eta,
                    &eq.parameter_env(&inst.arguments),
                    bounds,
                )?;
                if value != eta.get(inst) {
                    eta.set(inst.clone(), value);
                    round = true;
                }
            }
            if !round {
                break;
            }
            changed = true;
        }
        if !changed || level + 1 == blocks.len() {
            return Ok(());
        }
    }
}

/// Parses the textual equation-system dump.
pub fn parse_pbes(text: &str) -> Result<Pbes, ParseError> {
    let mut p = Parser::new(text)?;
    let mut equations = Vec::new();
    while p.at_keyword("mu") || p.at_keyword("nu") {
        let fixpoint = if p.eat_keyword("mu") {
            Fixpoint::Mu
        } else {
            p.next();
            Fixpoint::Nu
        };
        let variable = p.expect_ident()?;
        let mut parameters = Vec::new();
        if p.eat(&Tok::LParen) {
            loop {
                let name = p.expect_ident()?;
                p.expect(&Tok::Colon)?;
                parameters.push((name, p.parse_sort()?));
                if !p.eat(&Tok::Comma) {
                    break;
                }
            }
            p.expect(&Tok::RParen)?;
        }
        p.expect(&Tok::Assign)?;
        let mut scope = Scope::new();
        for (n, s) in &parameters {
            scope.push(n, *s);
        }
        let rhs = predicate_formula(&mut p, &mut scope)?;
        p.expect(&Tok::Semi)?;
        equations.push(Equation {
            fixpoint,
            variable,
            parameters,
            rhs,
        });
    }
    p.expect_keyword("init")?;
    let variable = p.expect_ident()?;
    let mut arguments = Vec::new();
    if p.eat(&Tok::LParen) {
        loop {
            let t = p.parse_term(&Scope::new())?;
            arguments.push(
                t.eval(&DataEnvironment::new())
                    .expect("closed well-sorted term"),
            );
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
        p.expect(&Tok::RParen)?;
    }
    p.expect(&Tok::Semi)?;
    p.expect_eof()?;
    Ok(Pbes {
        equations,
        initial: Instance::new(variable, arguments),
    })
}

fn predicate_formula(p: &mut Parser, scope: &mut Scope) -> Result<PredicateFormula, ParseError> {
    if p.at_keyword("exists") || p.at_keyword("forall") {
        return quantifier(p, scope);
    }
    let mut f = pf_and(p, scope)?;
    while p.eat(&Tok::OrOr) {
        f = PredicateFormula::or(f, pf_and(p, scope)?);
    }
    Ok(f)
}

fn quantifier(p: &mut Parser, scope: &mut Scope) -> Result<PredicateFormula, ParseError> {
    let universal = p.eat_keyword("forall");
    if !universal {
        p.expect_keyword("exists")?;
    }
    let var = p.expect_ident()?;
    p.expect(&Tok::Colon)?;
    let sort = p.parse_sort()?;
    p.expect(&Tok::Dot)?;
    scope.push(&var, sort);
    let body = predicate_formula(p, scope);
    scope.pop();
    let body = body?;
    Ok(if universal {
        PredicateFormula::forall(&var, sort, body)
    } else {
        PredicateFormula::exists(&var, sort, body)
    })
}

fn pf_and(p: &mut Parser, scope: &mut Scope) -> Result<PredicateFormula, ParseError> {
    let mut f = pf_atom(p, scope)?;
    while p.eat(&Tok::AndAnd) {
        f = PredicateFormula::and(f, pf_atom(p, scope)?);
    }
    Ok(f)
}

fn pf_atom(p: &mut Parser, scope: &mut Scope) -> Result<PredicateFormula, ParseError> {
    if p.at_keyword("exists") || p.at_keyword("forall") {
        return quantifier(p, scope);
    }
    if p.eat_keyword("true") {
        return Ok(PredicateFormula::tt());
    }
    if p.eat_keyword("false") {
        return Ok(PredicateFormula::ff());
    }
    if p.eat_keyword("val") {
        p.expect(&Tok::LParen)?;
        let t = p.parse_term_of(scope, Sort::Bool)?;
        p.expect(&Tok::RParen)?;
        return Ok(PredicateFormula::Data(t));
    }
    if p.eat(&Tok::LParen) {
        let f = predicate_formula(p, scope)?;
        p.expect(&Tok::RParen)?;
        return Ok(f);
    }
    if let Tok::Ident(name) = p.peek().clone() {
        p.next();
        let mut args = Vec::new();
        if p.eat(&Tok::LParen) {
            loop {
                args.push(p.parse_term(scope)?);
                if !p.eat(&Tok::Comma) {
                    break;
                }
            }
            p.expect(&Tok::RParen)?;
        }
        return Ok(PredicateFormula::Call(name, args));
    }
    Err(p.error(ParseErrorKind::Syntax(format!(
        "expected a predicate formula, found {}",
        p.peek()
    ))))
}

impl PredicateFormula {
    fn level(&self) -> u8 {
        match self {
            PredicateFormula::Exists(..) | PredicateFormula::Forall(..) => 0,
            PredicateFormula::Or(..) => 1,
            PredicateFormula::And(..) => 2,
            PredicateFormula::Data(_) | PredicateFormula::Call(..) => 3,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.level() < min {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            PredicateFormula::Data(t) => match t.as_bool_const() {
                Some(b) => write!(f, "{b}"),
                None => write!(f, "val({t})"),
            },
            PredicateFormula::Call(x, args) => {
                write!(f, "{x}")?;
                if !args.is_empty() {
                    let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                    write!(f, "({})", args.join(", "))?;
                }
                Ok(())
            }
            PredicateFormula::Or(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " || ")?;
                b.fmt_at(f, 2)
            }
            PredicateFormula::And(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, " && ")?;
                b.fmt_at(f, 3)
            }
            PredicateFormula::Exists(x, s, g) => {
                write!(f, "exists {x}: {s} . ")?;
                g.fmt_at(f, 0)
            }
            PredicateFormula::Forall(x, s, g) => {
                write!(f, "forall {x}: {s} . ")?;
                g.fmt_at(f, 0)
            }
        }
    }
}

impl fmt::Display for PredicateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.fixpoint, self.variable)?;
        if !self.parameters.is_empty() {
            let ps: Vec<String> = self
                .parameters
                .iter()
                .map(|(n, s)| format!("{n}: {s}"))
                .collect();
            write!(f, "({})", ps.join(", "))?;
        }
        write!(f, " = {};", self.rhs)
    }
}

impl fmt::Display for Pbes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.equations {
            writeln!(f, "{e}")?;
        }
        writeln!(f, "init {};", self.initial)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EXAMPLE_CORE: &str = "\
        mu X(s: Nat) = (exists n: Nat . val(s == 1 && 0 < n < 3) && X(s + n))\n\
                     || (exists n: Nat . val(0 < n < s < 3) && X(s - n))\n\
                     || val(s == 3) && Y(s);\n\
        nu Y(s: Nat) = val(s == 3) && Y(s);\n\
        init X(1);";

    fn inst(x: &str, args: &[u64]) -> Instance {
        Instance::new(x, args.iter().map(|a| Value::nat(*a)).collect())
    }

    fn s_env(v: u64) -> DataEnvironment {
        DataEnvironment::new().update("s", Value::nat(v))
    }

    #[test]
    fn example_core_is_well_formed() {
        let p = parse_pbes(EXAMPLE_CORE).unwrap();
        p.check().unwrap();
        assert_eq!(p.rank("X"), Ok(1));
        assert_eq!(p.rank("Y"), Ok(2));
        assert_eq!(p.rank("Z"), Err(PbesError::UnknownVariable("Z".into())));
    }

    #[test]
    fn ranks_start_even_for_greatest() {
        let p = parse_pbes("nu Z(d: Nat) = true; init Z(0);").unwrap();
        assert_eq!(p.ranks(), vec![0]);
        let q = parse_pbes("mu A = B; nu B = C; mu C = A; init A;").unwrap();
        assert_eq!(q.ranks(), vec![1, 2, 3]);
        let r = parse_pbes("nu A = B; nu B = C; mu C = A; mu D = A; nu E = A; init A;").unwrap();
        assert_eq!(r.ranks(), vec![0, 0, 1, 1, 2]);
    }

    #[test]
    fn eval_matches_semantics_table() {
        let p = parse_pbes(EXAMPLE_CORE).unwrap();
        let phi_x = &p.equations[0].rhs;
        let phi_y = &p.equations[1].rhs;
        let b = Bounds::default();
        let mut eta = PredicateEnvironment::with_default(false);
        eta.set(inst("Y", &[3]), true);
        assert!(eval_predicate_formula(phi_y, &eta, &s_env(3), &b).unwrap());
        assert!(!eval_predicate_formula(phi_y, &eta, &s_env(1), &b).unwrap());
        let mut eta = PredicateEnvironment::with_default(false);
        eta.set(inst("X", &[3]), true);
        assert!(eval_predicate_formula(phi_x, &eta, &s_env(1), &b).unwrap());
        assert!(!eval_predicate_formula(phi_x, &eta, &s_env(2), &b).unwrap());
    }

    #[test]
    fn brute_force_on_example_core() {
        let p = parse_pbes(EXAMPLE_CORE).unwrap();
        let sol = brute_force_solve(&p, &Bounds::default()).unwrap();
        for (x, v, expected) in [
            ("X", 1, true),
            ("X", 2, true),
            ("X", 3, true),
            ("Y", 3, true),
            ("Y", 1, false),
            ("Y", 2, false),
        ] {
            assert_eq!(sol.get(&inst(x, &[v])), expected, "{x}({v})");
        }
    }

    #[test]
    fn trivial_fixpoints() {
        let b = Bounds::default();
        let p = parse_pbes("nu Z(d: Nat) = true; init Z(4);").unwrap();
        assert!(brute_force_solve(&p, &b).unwrap().get(&inst("Z", &[4])));
        let q = parse_pbes("mu Z(d: Nat) = Z(d); init Z(4);").unwrap();
        assert!(!brute_force_solve(&q, &b).unwrap().get(&inst("Z", &[4])));
        let r = parse_pbes("nu Z(d: Nat) = Z(d); init Z(4);").unwrap();
        assert!(brute_force_solve(&r, &b).unwrap().get(&inst("Z", &[4])));
    }

    #[test]
    fn alternation_is_respected() {
        // nu X . mu Y . (a-step to X and b-step to Y) on a two-state loop.
        let src = "nu X(s: Nat) = Y(s);\n\
                   mu Y(s: Nat) = val(s == 0) && X(1) || val(s == 1) && Y(0);\n\
                   init X(0);";
        let p = parse_pbes(src).unwrap();
        let sol = brute_force_solve(&p, &Bounds::default()).unwrap();
        // X(0) -> Y(0) -> X(1) -> Y(1) -> Y(0): the cycle visits X, rank 0.
        assert!(sol.get(&inst("X", &[0])));
        let src = "mu X(s: Nat) = Y(s);\n\
                   nu Y(s: Nat) = val(s == 0) && X(1) || val(s == 1) && Y(0);\n\
                   init X(0);";
        let p = parse_pbes(src).unwrap();
        let sol = brute_force_solve(&p, &Bounds::default()).unwrap();
        assert!(!sol.get(&inst("X", &[0])));
    }

    #[test]
    fn check_rejects_mutations() {
        let p = parse_pbes(EXAMPLE_CORE).unwrap();
        let mut dropped = p.clone();
        dropped.equations.pop();
        assert_eq!(dropped.check(), Err(PbesError::UnknownVariable("Y".into())));
        let mut dup = p.clone();
        dup.equations.push(p.equations[1].clone());
        assert_eq!(dup.check(), Err(PbesError::DuplicateEquation("Y".into())));
        let mut arity = p.clone();
        arity.equations[1].rhs = PredicateFormula::call("Y", vec![]);
        assert!(matches!(arity.check(), Err(PbesError::Arity { .. })));
        let mut free = p.clone();
        free.equations[1].rhs =
            PredicateFormula::Data(Term::eq(Term::var("t", Sort::Nat), Term::nat(0)));
        assert!(matches!(
            free.check(),
            Err(PbesError::FreeDataVariable { .. })
        ));
        let mut unbound = p;
        unbound.equations[1].rhs = PredicateFormula::call("W", vec![Term::nat(0)]);
        assert_eq!(unbound.check(), Err(PbesError::UnknownVariable("W".into())));
    }

    #[test]
    fn substitution_avoids_capture() {
        let f = PredicateFormula::exists(
            "n",
            Sort::Nat,
            PredicateFormula::and(
                PredicateFormula::Data(Term::less(Term::var("n", Sort::Nat), Term::nat(3))),
                PredicateFormula::call(
                    "X",
                    vec![Term::plus(
                        Term::var("s", Sort::Nat),
                        Term::var("n", Sort::Nat),
                    )],
                ),
            ),
        );
        let g = f.substitute("s", &Term::var("n", Sort::Nat));
        assert_eq!(g.free_data_vars(), BTreeSet::from(["n".to_string()]));
        assert_eq!(g.to_string(), "exists n1: Nat . val(n1 < 3) && X(n + n1)");
    }

    #[test]
    fn simplify_folds_constants() {
        let f = parse_pbes(
            "mu X(s: Nat) = exists n: Nat . val(n < 2) && true && false || X(s) && val(1 < 2); init X(0);",
        )
        .unwrap();
        assert_eq!(f.equations[0].rhs.simplify().to_string(), "X(s)");
    }

    #[test]
    fn dump_round_trips() {
        let p = parse_pbes(EXAMPLE_CORE).unwrap();
        assert_eq!(parse_pbes(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn universal_guard_bounds_enumeration() {
        let src = "nu X(s: Nat) = forall n: Nat . val(!(n < 4)) || X(n); init X(0);";
        let p = parse_pbes(src).unwrap();
        let sol = brute_force_solve(&p, &Bounds::default()).unwrap();
        assert!(sol.get(&inst("X", &[0])));
        assert_eq!(sol.explicit.len(), 4);
    }
}
