//! Linear process equations, their textual format and LTS exploration.
//!
//! A model file declares a single linear process with one parameter, a
//! `+`-separated list of condition-action-effect summands, and an initial
//! state:
//!
//! ```text
//! % running example with M = 3
//! proc L(s : Nat) =
//!     sum n : Nat . (s == 1 && 0 < n < 3) -> a . L(s + n)
//!   + sum n : Nat . (0 < n < s < 3) -> b . L(s - n)
//!   + (s == 3) -> c . L(s);
//! init L(1);
//! ```
//!
//! Optional `act a, b;` lines extend the action alphabet beyond the labels
//! used by summands, and `delta` stands for the empty summand list. Processes
//! with several state variables must be tupled into one parameter upstream.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::kernel::{enumerate_values, Bounds, DataEnvironment, EvalError, Sort, Term, Value};
use crate::syntax::{ParseError, Parser, Scope, Tok};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Summand {
    pub action: String,
    /// The summation variable and its sort, if any.
    pub local: Option<(String, Sort)>,
    pub condition: Term,
    pub next_state: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lpe {
    pub name: String,
    pub parameter: (String, Sort),
    pub summands: Vec<Summand>,
    pub alphabet: BTreeSet<String>,
}

/// A linear process together with its initial state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub lpe: Lpe,
    pub init: Value,
}

/// An explored labelled transition system. States are parameter values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts {
    pub initial: Value,
    pub states: BTreeSet<Value>,
    pub transitions: BTreeSet<(Value, String, Value)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("state space exceeds {limit} states")]
    StateExplosion { limit: usize },
    #[error("initial state {value} does not have the parameter sort {sort}")]
    InitialSort { value: Value, sort: Sort },
}

impl ModelError {
    pub fn is_resource_bound(&self) -> bool {
        match self {
            ModelError::Eval(e) => e.is_resource_bound(),
            ModelError::StateExplosion { .. } => true,
            ModelError::InitialSort { .. } => false,
        }
    }
}

impl Summand {
    /// All states reachable from `state` by one step of this summand.
    pub fn successors(
        &self,
        parameter: &str,
        state: &Value,
        bounds: &Bounds,
    ) -> Result<Vec<Value>, EvalError> {
        let env = DataEnvironment::new().update(parameter, state.clone());
        let mut out = Vec::new();
        match &self.local {
            None => {
                if self.condition.eval_bool(&env)? {
                    out.push(self.next_state.eval(&env)?);
                }
            }
            Some((var, sort)) => {
                for v in enumerate_values(var, *sort, &[&self.condition], &env, bounds)? {
                    let env = env.update(var, v);
                    if self.condition.eval_bool(&env)? {
                        out.push(self.next_state.eval(&env)?);
                    }
                }
            }
        }
        Ok(out)
    }
}

impl Lpe {
    /// The labelled successors of a single state.
    pub fn successors(
        &self,
        state: &Value,
        bounds: &Bounds,
    ) -> Result<Vec<(String, Value)>, EvalError> {
        let mut out = Vec::new();
        for s in &self.summands {
            for next in s.successors(&self.parameter.0, state, bounds)? {
                out.push((s.action.clone(), next));
            }
        }
        Ok(out)
    }

    /// Whether `from --action--> to` is a transition of this process.
    pub fn has_transition(
        &self,
        from: &Value,
        action: &str,
        to: &Value,
        bounds: &Bounds,
    ) -> Result<bool, EvalError> {
        for s in self.summands.iter().filter(|s| s.action == action) {
            if s.successors(&self.parameter.0, from, bounds)?.contains(to) {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Breadth-first exploration of the transition system of `lpe` from `init`.
pub fn explore_lts(lpe: &Lpe, init: &Value, bounds: &Bounds) -> Result<Lts, ModelError> {
    if init.sort() != lpe.parameter.1 {
        return Err(ModelError::InitialSort {
            value: init.clone(),
            sort: lpe.parameter.1,
        });
    }
    let mut states = BTreeSet::from([init.clone()]);
    let mut transitions = BTreeSet::new();
    let mut queue = VecDeque::from([init.clone()]);
    while let Some(state) = queue.pop_front() {
        for (label, next) in lpe.successors(&state, bounds)? {
            if states.insert(next.clone()) {
                if states.len() > bounds.max_vertices {
                    return Err(ModelError::StateExplosion {
                        limit: bounds.max_vertices,
                    });
                }
                queue.push_back(next.clone());
            }
            transitions.insert((state.clone(), label, next));
        }
    }
    Ok(Lts {
        initial: init.clone(),
        states,
        transitions,
    })
}

impl Lts {
    /// Whether every state and transition of `self` also belongs to `other`.
    pub fn is_subgraph_of(&self, other: &Lts) -> bool {
        self.states.is_subset(&other.states) && self.transitions.is_subset(&other.transitions)
    }

    /// States in first-visit order of a breadth-first traversal from the
    /// initial state; unreachable states follow in value order.
    pub fn state_order(&self) -> Vec<&Value> {
        let mut out: BTreeMap<&Value, Vec<&Value>> = BTreeMap::new();
        for (from, _, to) in &self.transitions {
            out.entry(from).or_default().push(to);
        }
        let mut order = vec![&self.initial];
        let mut seen = BTreeSet::from([&self.initial]);
        let mut i = 0;
        while i < order.len() {
            for &to in out.get(order[i]).into_iter().flatten() {
                if seen.insert(to) {
                    order.push(to);
                }
            }
            i += 1;
        }
        for s in &self.states {
            if seen.insert(s) {
                order.push(s);
            }
        }
        order
    }

    /// Reads the transition system back as a linear process whose summands
    /// are the individual transitions.
    pub fn to_model(&self, alphabet: &BTreeSet<String>) -> Model {
        let sort = self.initial.sort();
        let param = "s".to_string();
        let summands = self
            .transitions
            .iter()
            .map(|(from, label, to)| Summand {
                action: label.clone(),
                local: None,
                condition: Term::eq(Term::var(&param, sort), Term::Const(from.clone())),
                next_state: Term::Const(to.clone()),
            })
            .collect();
        let mut alphabet = alphabet.clone();
        alphabet.extend(self.transitions.iter().map(|(_, l, _)| l.clone()));
        Model {
            lpe: Lpe {
                name: "L".into(),
                parameter: (param, sort),
                summands,
                alphabet,
            },
            init: self.initial.clone(),
        }
    }
}

/// Parses a model in the line-oriented process format.
pub fn parse_lpe(text: &str) -> Result<Model, ParseError> {
    let mut p = Parser::new(text)?;
    let mut alphabet = BTreeSet::new();
    while p.eat_keyword("act") {
        loop {
            alphabet.insert(p.expect_ident()?);
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
        p.expect(&Tok::Semi)?;
    }
    p.expect_keyword("proc")?;
    let name = p.expect_ident()?;
    p.expect(&Tok::LParen)?;
    let param = p.expect_ident()?;
    p.expect(&Tok::Colon)?;
    let sort = p.parse_sort()?;
    p.expect(&Tok::RParen)?;
    p.expect(&Tok::Assign)?;

    let mut scope = Scope::new();
    scope.push(&param, sort);
    let mut summands = Vec::new();
    if !p.eat_keyword("delta") {
        loop {
            summands.push(parse_summand(&mut p, &name, &param, sort, &mut scope)?);
            if !p.eat(&Tok::Plus) {
                break;
            }
        }
    }
    p.eat(&Tok::Semi);

    p.expect_keyword("init")?;
    let init_name = p.expect_ident()?;
    if init_name != name {
        return p.syntax(format!("`init` refers to `{init_name}`, expected `{name}`"));
    }
    p.expect(&Tok::LParen)?;
    let init = p.parse_term_of(&Scope::new(), sort)?;
    p.expect(&Tok::RParen)?;
    p.expect(&Tok::Semi)?;
    p.expect_eof()?;

    let init = init
        .eval(&DataEnvironment::new())
        .expect("closed well-sorted term evaluates");
    alphabet.extend(summands.iter().map(|s: &Summand| s.action.clone()));
    Ok(Model {
        lpe: Lpe {
            name,
            parameter: (param, sort),
            summands,
            alphabet,
        },
        init,
    })
}

fn parse_summand(
    p: &mut Parser,
    name: &str,
    param: &str,
    sort: Sort,
    scope: &mut Scope,
) -> Result<Summand, ParseError> {
    let mut local = None;
    if p.eat_keyword("sum") {
        let var = p.expect_ident()?;
        if var == param {
            return p.syntax(format!(
                "summation variable `{var}` shadows the process parameter"
            ));
        }
        p.expect(&Tok::Colon)?;
        let vsort = p.parse_sort()?;
        p.expect(&Tok::Dot)?;
        scope.push(&var, vsort);
        local = Some((var, vsort));
    }
    let result = (|| {
        let condition = if p.eat(&Tok::LParen) {
            let c = p.parse_term_of(scope, Sort::Bool)?;
            p.expect(&Tok::RParen)?;
            p.expect(&Tok::Arrow)?;
            c
        } else {
            Term::tt()
        };
        let action = p.expect_ident()?;
        p.expect(&Tok::Dot)?;
        let target = p.expect_ident()?;
        if target != name {
            return p.syntax(format!(
                "summand continues as `{target}`, expected `{name}`"
            ));
        }
        p.expect(&Tok::LParen)?;
        let next_state = p.parse_term_of(scope, sort)?;
        p.expect(&Tok::RParen)?;
        Ok((condition, action, next_state))
    })();
    if local.is_some() {
        scope.pop();
    }
    let (condition, action, next_state) = result?;
    Ok(Summand {
        action,
        local,
        condition,
        next_state,
    })
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lpe = &self.lpe;
        let used: BTreeSet<&String> = lpe.summands.iter().map(|s| &s.action).collect();
        let extra: Vec<&String> = lpe.alphabet.iter().filter(|a| !used.contains(a)).collect();
        if !extra.is_empty() {
            let names: Vec<&str> = extra.iter().map(|s| s.as_str()).collect();
            writeln!(f, "act {};", names.join(", "))?;
        }
        writeln!(
            f,
            "proc {}({} : {}) =",
            lpe.name, lpe.parameter.0, lpe.parameter.1
        )?;
        if lpe.summands.is_empty() {
            writeln!(f, "    delta;")?;
        }
        for (i, s) in lpe.summands.iter().enumerate() {
            let sep = if i == 0 { "    " } else { "  + " };
            write!(f, "{sep}")?;
            if let Some((v, vs)) = &s.local {
                write!(f, "sum {v} : {vs} . ")?;
            }
            write!(
                f,
                "({}) -> {} . {}({})",
                s.condition, s.action, lpe.name, s.next_state
            )?;
            if i + 1 == lpe.summands.len() {
                write!(f, ";")?;
            }
            writeln!(f)?;
        }
        writeln!(f, "init {}({});", lpe.name, self.init)
    }
}
