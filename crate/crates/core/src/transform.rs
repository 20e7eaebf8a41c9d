//! Restriction of an equation system to the dependencies of a guiding
//! evidence graph, and the checking pipelines built on it.
//!
//! The two-step pipeline solves the plain system first, then re-solves the
//! evidence system with every call `Y(e)` of an instance `X(v)` restricted to
//! the successors of `X(v)` in the guiding graph. For a proof the call
//! becomes `e ∈ E && Y(e)`, for a refutation `e ∉ E || Y(e)`, so that calls
//! outside the guiding graph can neither help a proof nor a refutation.
//! Evidence variables are never restricted.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::encode::{core_of, encode, strip_for_polarity, EncodeError, Encoding, Side};
use crate::formula::MuFormula;
use crate::graphs::{
    ground, instantiate, validate_evidence_graph, EvidenceGraph, GraphError, Ground, Owner,
    Polarity, RhsProvider, Violation,
};
use crate::kernel::{Bounds, Term, Value};
use crate::model::Lpe;
use crate::pbes::{Equation, Instance, Pbes, PredicateFormula};
use crate::solve::{extract_evidence_graph, zielonka, SolveError};

/// The per-instance restriction derived from a guiding evidence graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombineContext {
    pub polarity: Polarity,
    /// `V_X`: argument tuples of the guiding graph's vertices, per variable.
    pub vertices: BTreeMap<String, BTreeSet<Vec<Value>>>,
    /// `E_{X(v),Y}`: argument tuples of the `Y`-successors of `X(v)`.
    pub edges: BTreeMap<(Instance, String), BTreeSet<Vec<Value>>>,
    /// Variables that are never restricted.
    pub unrestricted: BTreeSet<String>,
}

impl CombineContext {
    pub fn from_graph(g: &EvidenceGraph, unrestricted: impl IntoIterator<Item = String>) -> Self {
        let mut vertices: BTreeMap<String, BTreeSet<Vec<Value>>> = BTreeMap::new();
        for v in &g.vertices {
            vertices
                .entry(v.variable.clone())
                .or_default()
                .insert(v.arguments.clone());
        }
        let mut edges: BTreeMap<(Instance, String), BTreeSet<Vec<Value>>> = BTreeMap::new();
        for (a, b) in &g.edges {
            edges
                .entry((a.clone(), b.variable.clone()))
                .or_default()
                .insert(b.arguments.clone());
        }
        Self {
            polarity: g.polarity,
            vertices,
            edges,
            unrestricted: unrestricted.into_iter().collect(),
        }
    }

    fn contains(&self, inst: &Instance) -> bool {
        self.vertices
            .get(&inst.variable)
            .is_some_and(|vs| vs.contains(&inst.arguments))
    }

    fn allowed(&self, source: &Instance, target: &Instance) -> Option<&BTreeSet<Vec<Value>>> {
        self.edges.get(&(source.clone(), target.variable.clone()))
    }

    /// The constant replacing a call that is not allowed.
    fn blocked(&self) -> bool {
        self.polarity == Polarity::Refutation
    }
}

impl RhsProvider for CombineContext {
    fn admit(&self, source: &Instance) -> Result<(), GraphError> {
        if self.unrestricted.contains(&source.variable) || self.contains(source) {
            Ok(())
        } else {
            Err(GraphError::UnknownInstance(source.clone()))
        }
    }

    fn restrict(&self, source: &Instance, target: &Instance) -> Option<bool> {
        if self.unrestricted.contains(&target.variable) {
            return None;
        }
        match self.allowed(source, target) {
            Some(set) if set.contains(&target.arguments) => None,
            _ => Some(self.blocked()),
        }
    }
}

/// `e ∈ set` as a data term over tuples.
fn membership(args: &[Term], set: Option<&BTreeSet<Vec<Value>>>) -> Term {
    let Some(set) = set else {
        return Term::ff();
    };
    Term::disjunction(set.iter().map(|tuple| {
        Term::conjunction(
            args.iter()
                .zip(tuple)
                .map(|(a, v)| Term::eq(a.clone(), Term::Const(v.clone()))),
        )
    }))
}

fn restricted_call(polarity: Polarity, member: Term, call: PredicateFormula) -> PredicateFormula {
    match polarity {
        Polarity::Proof => PredicateFormula::and(PredicateFormula::Data(member), call),
        Polarity::Refutation => {
            PredicateFormula::or(PredicateFormula::Data(Term::not(member)), call)
        }
    }
}

/// The right-hand side of the instance `X(v)` of `eq` under the
/// restriction, with the parameters fixed to `v` and constants folded.
pub fn combine_rhs(
    ctx: &CombineContext,
    eq: &Equation,
    v: &[Value],
) -> Result<PredicateFormula, GraphError> {
    let source = Instance::new(eq.variable.clone(), v.to_vec());
    if !ctx.contains(&source) {
        return Err(GraphError::UnknownInstance(source));
    }
    let fixed = eq.rhs.substitute_env(&eq.parameter_env(v));
    Ok(fixed
        .map_calls(&mut |y, args| {
            if ctx.unrestricted.contains(y) {
                return None;
            }
            let set = ctx.edges.get(&(source.clone(), y.to_string()));
            let call = PredicateFormula::call(y, args.to_vec());
            Some(restricted_call(ctx.polarity, membership(args, set), call))
        })
        .simplify())
}

/// The restricted system written out in full: every restricted call `Y(e)`
/// in the equation of `X(d)` becomes a conjunction (for a refutation, a
/// disjunction) over all `v ∈ V_X` of the clause for `d ≈ v`. Meant for
/// small inputs and for checking the on-the-fly restriction against.
pub fn materialize_combined(p: &Pbes, ctx: &CombineContext) -> Pbes {
    let mut out = p.clone();
    for eq in &mut out.equations {
        if ctx.unrestricted.contains(&eq.variable) {
            continue;
        }
        let params: Vec<Term> = eq
            .parameters
            .iter()
            .map(|(n, s)| Term::var(n, *s))
            .collect();
        let vs: Vec<Vec<Value>> = ctx
            .vertices
            .get(&eq.variable)
            .map(|s| s.iter().cloned().collect())
            .unwrap_or_default();
        let x = eq.variable.clone();
        eq.rhs = eq.rhs.map_calls(&mut |y, args| {
            if ctx.unrestricted.contains(y) {
                return None;
            }
            let clauses = vs.iter().map(|v| {
                let is_v = Term::conjunction(
                    params
                        .iter()
                        .zip(v)
                        .map(|(d, val)| Term::eq(d.clone(), Term::Const(val.clone()))),
                );
                let source = Instance::new(x.clone(), v.clone());
                let set = ctx.edges.get(&(source, y.to_string()));
                let call = PredicateFormula::call(y, args.to_vec());
                let body = restricted_call(ctx.polarity, membership(args, set), call);
                match ctx.polarity {
                    Polarity::Proof => {
                        PredicateFormula::or(PredicateFormula::Data(Term::not(is_v)), body)
                    }
                    Polarity::Refutation => {
                        PredicateFormula::and(PredicateFormula::Data(is_v), body)
                    }
                }
            });
            Some(match ctx.polarity {
                Polarity::Proof => PredicateFormula::conjunction(clauses),
                Polarity::Refutation => PredicateFormula::disjunction(clauses),
            })
        });
    }
    out
}

/// Adds to the guiding graph every evidence instance of the polarity's side
/// that the restricted right-hand sides of its vertices mention.
pub fn extend_with_evidence(
    guide: &EvidenceGraph,
    stripped: &Pbes,
    encoding: &Encoding,
    ctx: &CombineContext,
    bounds: &Bounds,
) -> Result<EvidenceGraph, GraphError> {
    let side = match guide.polarity {
        Polarity::Proof => Side::Plus,
        Polarity::Refutation => Side::Minus,
    };
    let ranks = stripped.rank_map();
    let mut out = guide.clone();
    for v in &guide.vertices {
        let eq = stripped
            .equation(&v.variable)
            .ok_or_else(|| GraphError::UnknownVariable(v.variable.clone()))?;
        let mut found = Vec::new();
        ground(
            &eq.rhs,
            &eq.parameter_env(&v.arguments),
            bounds,
            &mut |target| match ctx.restrict(v, &target) {
                Some(b) => Ground::Const(b),
                None => {
                    if encoding.evidence.label_of(&target.variable).map(|(_, s)| s) == Some(side) {
                        found.push(target.clone());
                    }
                    Ground::Call(target)
                }
            },
        )?;
        for z in found {
            out.ranks.insert(z.variable.clone(), ranks[&z.variable]);
            out.vertices.insert(z.clone());
            out.edges.insert((v.clone(), z));
        }
    }
    Ok(out)
}

/// How a formula is checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Solve the plain system only; no evidence.
    Plain,
    /// Solve the evidence system in one go.
    Direct,
    /// Solve the plain system, then the restricted evidence system.
    TwoStep,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stats {
    pub mode: Mode,
    pub verdict: bool,
    /// Instance vertices of the plain system (two-step and plain modes).
    pub phase1_vertices: Option<usize>,
    /// Instance vertices of the restricted evidence system.
    pub phase2_vertices: Option<usize>,
    /// Instance vertices of the unrestricted evidence system.
    pub direct_vertices: Option<usize>,
    pub wall_times_ms: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub verdict: bool,
    /// Proof or refutation graph of the evidence system; absent in plain mode.
    pub evidence: Option<EvidenceGraph>,
    /// Phase-one graph of the plain system (two-step mode only).
    pub guide: Option<EvidenceGraph>,
    pub encoding: Encoding,
    pub stats: Stats,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("the restricted system disagrees with the plain system")]
    VerdictMismatch,
    #[error("the evidence graph does not validate: {0:?}")]
    InvalidEvidence(Vec<Violation>),
}

impl PipelineError {
    pub fn is_resource_bound(&self) -> bool {
        matches!(self, PipelineError::Graph(e) if e.is_resource_bound())
    }
}

struct Timer(BTreeMap<String, f64>);

impl Timer {
    fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0
            .insert(phase.to_string(), start.elapsed().as_secs_f64() * 1000.0);
        out
    }
}

fn solve_game(
    p: &Pbes,
    provider: Option<&dyn RhsProvider>,
    bounds: &Bounds,
    timer: &mut Timer,
    phase: &str,
) -> Result<(bool, EvidenceGraph, usize), PipelineError> {
    let game = timer.time(&format!("{phase}_instantiate"), || {
        instantiate(p, provider, bounds)
    })?;
    let sol = timer.time(&format!("{phase}_solve"), || zielonka(&game));
    let verdict = sol.winner(game.initial) == Owner::Even;
    let graph = extract_evidence_graph(&game, &sol, Polarity::of_verdict(verdict))?;
    Ok((verdict, graph, game.instance_count()))
}

/// Checks `phi` on `lpe` from `init` in the given mode. Evidence graphs are
/// validated against the evidence system before they are returned.
pub fn run(
    lpe: &Lpe,
    phi: &MuFormula,
    init: &Value,
    mode: Mode,
    bounds: &Bounds,
) -> Result<Outcome, PipelineError> {
    let mut timer = Timer(BTreeMap::new());
    let encoding = timer.time("encode", || encode(lpe, phi, init))?;
    let e = &encoding.pbes;
    let mut stats = Stats {
        mode,
        verdict: false,
        phase1_vertices: None,
        phase2_vertices: None,
        direct_vertices: None,
        wall_times_ms: BTreeMap::new(),
    };
    let (verdict, evidence, guide) = match mode {
        Mode::Plain => {
            let core = core_of(e)?;
            let (verdict, _, n) = solve_game(&core, None, bounds, &mut timer, "phase1")?;
            stats.phase1_vertices = Some(n);
            (verdict, None, None)
        }
        Mode::Direct => {
            let (verdict, graph, n) = solve_game(e, None, bounds, &mut timer, "direct")?;
            stats.direct_vertices = Some(n);
            (verdict, Some(graph), None)
        }
        Mode::TwoStep => {
            let core = core_of(e)?;
            let (verdict, guide, n1) = solve_game(&core, None, bounds, &mut timer, "phase1")?;
            stats.phase1_vertices = Some(n1);
            let stripped = strip_for_polarity(e, verdict)?;
            let evidence_vars = encoding
                .evidence
                .plus
                .values()
                .chain(encoding.evidence.minus.values())
                .cloned();
            let ctx = CombineContext::from_graph(&guide, evidence_vars);
            let (again, graph, n2) =
                solve_game(&stripped, Some(&ctx), bounds, &mut timer, "phase2")?;
            if again != verdict {
                return Err(PipelineError::VerdictMismatch);
            }
            stats.phase2_vertices = Some(n2);
            (verdict, Some(graph), Some(guide))
        }
    };
    if let Some(g) = &evidence {
        timer
            .time("validate", || validate_evidence_graph(g, e, bounds))
            .map_err(PipelineError::InvalidEvidence)?;
    }
    stats.verdict = verdict;
    stats.wall_times_ms = timer.0;
    tracing::info!(?mode, verdict, "checked formula");
    Ok(Outcome {
        verdict,
        evidence,
        guide,
        encoding,
        stats,
    })
}

/// The two-step pipeline.
pub fn run_pipeline(
    lpe: &Lpe,
    phi: &MuFormula,
    init: &Value,
    bounds: &Bounds,
) -> Result<Outcome, PipelineError> {
    run(lpe, phi, init, Mode::TwoStep, bounds)
}
