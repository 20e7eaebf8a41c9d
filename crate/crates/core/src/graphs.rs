//! Parity games instantiated from equation systems, the instance-level
//! dependency graph, evidence graphs and their validation.
//!
//! Each reachable instance becomes a vertex whose right-hand side, after
//! constant folding, is decomposed into a tree of disjunctions (owned by
//! Even) and conjunctions (owned by Odd). Inner tree nodes become synthetic
//! vertices with the priority of their instance. Constant right-hand sides
//! lead to two shared sinks: `true` (priority 0) and `false` (priority 1),
//! each with a self-loop.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use indexmap::IndexSet;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::encode::{EvidenceVariables, Side};
use crate::kernel::{Bounds, DataEnvironment, EvalError};
use crate::pbes::{eval_predicate_formula, Instance, Pbes, PredicateEnvironment, PredicateFormula};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Owner {
    Even,
    Odd,
}

impl Owner {
    pub fn opponent(self) -> Owner {
        match self {
            Owner::Even => Owner::Odd,
            Owner::Odd => Owner::Even,
        }
    }

    /// The player who wins plays whose minimal recurring priority is `p`.
    pub fn of_priority(p: u32) -> Owner {
        if p.is_multiple_of(2) {
            Owner::Even
        } else {
            Owner::Odd
        }
    }
}

/// What a game vertex stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    /// Index into [`ParityGame::instances`].
    Instance(usize),
    /// A subformula of the right-hand side of the instance vertex given.
    Synthetic(usize),
    True,
    False,
}

#[derive(Clone, Debug)]
pub struct ParityGame {
    pub origin: Vec<Origin>,
    pub owner: Vec<Owner>,
    pub priority: Vec<u32>,
    pub successors: Vec<Vec<usize>>,
    pub initial: usize,
    /// Instances in discovery order.
    pub instances: IndexSet<Instance>,
    /// The vertex of each instance.
    pub instance_vertex: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("more than {limit} vertices")]
    StateExplosion { limit: usize },
    #[error("unknown predicate variable `{0}`")]
    UnknownVariable(String),
    #[error("instance {0} is not a vertex of the guiding graph")]
    UnknownInstance(Instance),
}

impl GraphError {
    pub fn is_resource_bound(&self) -> bool {
        match self {
            GraphError::Eval(e) => e.is_resource_bound(),
            GraphError::StateExplosion { .. } => true,
            _ => false,
        }
    }
}

/// Restricts the dependencies of instances while they are expanded.
pub trait RhsProvider {
    /// Called once before `source` is expanded.
    fn admit(&self, source: &Instance) -> Result<(), GraphError>;
    /// `Some(b)` replaces the call of `target` inside the right-hand side of
    /// `source` by the constant `b`; `None` keeps it.
    fn restrict(&self, source: &Instance, target: &Instance) -> Option<bool>;
}

/// A right-hand side after grounding all data and folding constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ground {
    Const(bool),
    Call(Instance),
    And(Vec<Ground>),
    Or(Vec<Ground>),
}

impl Ground {
    fn junction(parts: Vec<Ground>, conjunctive: bool) -> Ground {
        let mut kept = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Ground::Const(b) if b == conjunctive => {}
                Ground::Const(b) => return Ground::Const(b),
                Ground::And(inner) if conjunctive => kept.extend(inner),
                Ground::Or(inner) if !conjunctive => kept.extend(inner),
                other => kept.push(other),
            }
        }
        match kept.len() {
            0 => Ground::Const(conjunctive),
            1 => kept.pop().expect("one element"),
            _ if conjunctive => Ground::And(kept),
            _ => Ground::Or(kept),
        }
    }
}

/// Grounds `phi` under `delta`, expanding quantifiers over their
/// enumerable ranges.
pub fn ground(
    phi: &PredicateFormula,
    delta: &DataEnvironment,
    bounds: &Bounds,
    call: &mut dyn FnMut(Instance) -> Ground,
) -> Result<Ground, EvalError> {
    Ok(match phi {
        PredicateFormula::Data(t) => Ground::Const(t.eval_bool(delta)?),
        PredicateFormula::Call(x, args) => {
            let arguments = args
                .iter()
                .map(|a| a.eval(delta))
                .collect::<Result<Vec<_>, _>>()?;
            call(Instance::new(x.clone(), arguments))
        }
        PredicateFormula::And(a, b) | PredicateFormula::Or(a, b) => {
            let conjunctive = matches!(phi, PredicateFormula::And(..));
            let left = ground(a, delta, bounds, call)?;
            // Short-circuit: the right operand is irrelevant.
            if left == Ground::Const(!conjunctive) {
                return Ok(left);
            }
            let right = ground(b, delta, bounds, call)?;
            Ground::junction(vec![left, right], conjunctive)
        }
        PredicateFormula::Exists(x, s, f) | PredicateFormula::Forall(x, s, f) => {
            let universal = matches!(phi, PredicateFormula::Forall(..));
            let mut parts = Vec::new();
            for v in PredicateFormula::quantifier_range(x, *s, f, universal, delta, bounds)? {
                let g = ground(f, &delta.update(x, v), bounds, call)?;
                if g == Ground::Const(!universal) {
                    return Ok(g);
                }
                parts.push(g);
            }
            Ground::junction(parts, universal)
        }
    })
}

struct Builder<'a> {
    pbes: &'a Pbes,
    ranks: Vec<u32>,
    index: std::collections::HashMap<&'a str, usize>,
    bounds: &'a Bounds,
    game: ParityGame,
    queue: VecDeque<usize>,
    true_sink: Option<usize>,
    false_sink: Option<usize>,
}

impl Builder<'_> {
    fn add_vertex(
        &mut self,
        origin: Origin,
        owner: Owner,
        priority: u32,
    ) -> Result<usize, GraphError> {
        let g = &mut self.game;
        if g.origin.len() >= self.bounds.max_vertices {
            return Err(GraphError::StateExplosion {
                limit: self.bounds.max_vertices,
            });
        }
        g.origin.push(origin);
        g.owner.push(owner);
        g.priority.push(priority);
        g.successors.push(Vec::new());
        Ok(g.origin.len() - 1)
    }

    fn intern(&mut self, inst: Instance) -> Result<usize, GraphError> {
        if let Some(id) = self.game.instances.get_index_of(&inst) {
            return Ok(self.game.instance_vertex[id]);
        }
        let eq = *self
            .index
            .get(inst.variable.as_str())
            .ok_or_else(|| GraphError::UnknownVariable(inst.variable.clone()))?;
        let (id, _) = self.game.instances.insert_full(inst);
        let v = self.add_vertex(Origin::Instance(id), Owner::Even, self.ranks[eq])?;
        self.game.instance_vertex.push(v);
        self.queue.push_back(v);
        Ok(v)
    }

    fn sink(&mut self, value: bool) -> Result<usize, GraphError> {
        let slot = if value {
            self.true_sink
        } else {
            self.false_sink
        };
        if let Some(v) = slot {
            return Ok(v);
        }
        let origin = if value { Origin::True } else { Origin::False };
        let v = self.add_vertex(origin, Owner::Even, u32::from(!value))?;
        self.game.successors[v].push(v);
        if value {
            self.true_sink = Some(v);
        } else {
            self.false_sink = Some(v);
        }
        Ok(v)
    }

    /// The vertex standing for a tree node below the instance vertex `root`.
    fn node(&mut self, g: Ground, root: usize) -> Result<usize, GraphError> {
        match g {
            Ground::Const(b) => self.sink(b),
            Ground::Call(inst) => self.intern(inst),
            Ground::And(children) => self.junction(children, Owner::Odd, root),
            Ground::Or(children) => self.junction(children, Owner::Even, root),
        }
    }

    fn junction(
        &mut self,
        children: Vec<Ground>,
        owner: Owner,
        root: usize,
    ) -> Result<usize, GraphError> {
        let v = self.add_vertex(Origin::Synthetic(root), owner, self.game.priority[root])?;
        let mut succ = Vec::with_capacity(children.len());
        for c in children {
            succ.push(self.node(c, root)?);
        }
        self.game.successors[v] = succ;
        Ok(v)
    }

    fn expand(&mut self, v: usize, provider: Option<&dyn RhsProvider>) -> Result<(), GraphError> {
        let Origin::Instance(id) = self.game.origin[v] else {
            unreachable!("only instance vertices are queued")
        };
        let inst = self.game.instances[id].clone();
        if let Some(p) = provider {
            p.admit(&inst)?;
        }
        let pbes = self.pbes;
        let eq = &pbes.equations[self.index[inst.variable.as_str()]];
        let delta = eq.parameter_env(&inst.arguments);
        let tree = ground(&eq.rhs, &delta, self.bounds, &mut |target| match provider
            .and_then(|p| p.restrict(&inst, &target))
        {
            Some(b) => Ground::Const(b),
            None => Ground::Call(target),
        })?;
        let (owner, children) = match tree {
            Ground::And(children) => (Owner::Odd, children),
            Ground::Or(children) => (Owner::Even, children),
            other => (Owner::Even, vec![other]),
        };
        self.game.owner[v] = owner;
        let mut succ = Vec::with_capacity(children.len());
        for c in children {
            succ.push(self.node(c, v)?);
        }
        self.game.successors[v] = succ;
        Ok(())
    }
}

/// Instantiates `p` from its initial instance into a parity game. With a
/// provider, calls are restricted while right-hand sides are grounded.
pub fn instantiate(
    p: &Pbes,
    provider: Option<&dyn RhsProvider>,
    bounds: &Bounds,
) -> Result<ParityGame, GraphError> {
    let mut b = Builder {
        pbes: p,
        ranks: p.ranks(),
        index: p.equation_index(),
        bounds,
        game: ParityGame {
            origin: Vec::new(),
            owner: Vec::new(),
            priority: Vec::new(),
            successors: Vec::new(),
            initial: 0,
            instances: IndexSet::new(),
            instance_vertex: Vec::new(),
        },
        queue: VecDeque::new(),
        true_sink: None,
        false_sink: None,
    };
    b.game.initial = b.intern(p.initial.clone())?;
    while let Some(v) = b.queue.pop_front() {
        b.expand(v, provider)?;
    }
    tracing::debug!(
        vertices = b.game.len(),
        instances = b.game.instance_count(),
        "instantiated parity game"
    );
    Ok(b.game)
}

impl ParityGame {
    pub fn len(&self) -> usize {
        self.origin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origin.is_empty()
    }

    /// Number of vertices that stand for instances.
    pub fn instance_count(&self) -> usize {
        self.instances.len()
    }

    pub fn instance_of(&self, v: usize) -> Option<&Instance> {
        match self.origin[v] {
            Origin::Instance(id) => Some(&self.instances[id]),
            _ => None,
        }
    }

    pub fn vertex_of(&self, inst: &Instance) -> Option<usize> {
        self.instances
            .get_index_of(inst)
            .map(|id| self.instance_vertex[id])
    }

    /// Instance vertices reachable from `v` through synthetic vertices only,
    /// following `succ` for each visited vertex.
    pub fn collapse(&self, v: usize, succ: &dyn Fn(usize) -> Vec<usize>) -> Vec<usize> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = succ(v);
        stack.reverse();
        while let Some(w) = stack.pop() {
            if !seen.insert(w) {
                continue;
            }
            match self.origin[w] {
                Origin::Instance(_) => out.push(w),
                Origin::Synthetic(_) => {
                    let mut next = succ(w);
                    next.reverse();
                    stack.extend(next);
                }
                Origin::True | Origin::False => {}
            }
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph game {\n");
        for v in 0..self.len() {
            let label = match self.origin[v] {
                Origin::Instance(id) => self.instances[id].to_string(),
                Origin::Synthetic(_) if self.owner[v] == Owner::Even => "or".into(),
                Origin::Synthetic(_) => "and".into(),
                Origin::True => "true".into(),
                Origin::False => "false".into(),
            };
            let shape = match self.owner[v] {
                Owner::Even => "diamond",
                Owner::Odd => "box",
            };
            let _ = writeln!(
                out,
                "  v{v} [label=\"{label}\\n{}\", shape={shape}];",
                self.priority[v]
            );
        }
        for (v, succ) in self.successors.iter().enumerate() {
            for w in succ {
                let _ = writeln!(out, "  v{v} -> v{w};");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Instance-level dependencies after constant folding.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RelevancyGraph {
    pub vertices: BTreeSet<Instance>,
    pub edges: BTreeSet<(Instance, Instance)>,
}

impl RelevancyGraph {
    pub fn from_game(g: &ParityGame) -> Self {
        let mut out = RelevancyGraph::default();
        for (id, inst) in g.instances.iter().enumerate() {
            out.vertices.insert(inst.clone());
            let v = g.instance_vertex[id];
            for w in g.collapse(v, &|u| g.successors[u].clone()) {
                let target = g.instance_of(w).expect("collapse yields instances");
                out.edges.insert((inst.clone(), target.clone()));
            }
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph relevancy {\n");
        for v in &self.vertices {
            let _ = writeln!(out, "  \"{v}\";");
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "  \"{a}\" -> \"{b}\";");
        }
        out.push_str("}\n");
        out
    }
}

pub fn relevancy_proxy(p: &Pbes, bounds: &Bounds) -> Result<RelevancyGraph, GraphError> {
    Ok(RelevancyGraph::from_game(&instantiate(p, None, bounds)?))
}

/// Whether an evidence graph certifies truth or falsity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Polarity {
    Proof,
    Refutation,
}

impl Polarity {
    pub fn of_verdict(verdict: bool) -> Self {
        if verdict {
            Polarity::Proof
        } else {
            Polarity::Refutation
        }
    }

    /// The game player whose winning strategy yields this kind of graph.
    pub fn player(self) -> Owner {
        match self {
            Polarity::Proof => Owner::Even,
            Polarity::Refutation => Owner::Odd,
        }
    }
}

/// A proof graph or refutation graph over instances.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvidenceGraph {
    pub polarity: Polarity,
    pub vertices: BTreeSet<Instance>,
    pub edges: BTreeSet<(Instance, Instance)>,
    pub ranks: BTreeMap<String, u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("{0} is not in the signature of the equation system")]
    NotInSignature(Instance),
    #[error("edge {0} -> {1} leaves the vertex set")]
    DanglingEdge(Instance, Instance),
    #[error("the successors of {0} do not justify its right-hand side")]
    LocalCondition(Instance),
    #[error("evaluating the right-hand side of {instance} failed: {error}")]
    Evaluation {
        instance: Instance,
        error: EvalError,
    },
    #[error("a cycle through {vertices:?} has minimal rank {rank}")]
    Parity { rank: u32, vertices: Vec<Instance> },
}

impl EvidenceGraph {
    pub fn successors<'a>(&'a self, v: &'a Instance) -> impl Iterator<Item = &'a Instance> + 'a {
        self.edges
            .iter()
            .filter(move |(a, _)| a == v)
            .map(|(_, b)| b)
    }

    pub fn to_dot(&self, evidence: Option<&EvidenceVariables>) -> String {
        let mut out = String::from("digraph evidence {\n");
        for v in &self.vertices {
            let rank = self.ranks.get(&v.variable).copied().unwrap_or_default();
            let style = match evidence.and_then(|e| e.label_of(&v.variable)) {
                Some((_, Side::Plus)) => ", shape=box, color=darkgreen",
                Some((_, Side::Minus)) => ", shape=box, color=red",
                None => "",
            };
            let _ = writeln!(out, "  \"{v}\" [label=\"{v}\\nrank {rank}\"{style}];");
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "  \"{a}\" -> \"{b}\";");
        }
        out.push_str("}\n");
        out
    }
}

/// Checks the local and the parity condition of an evidence graph against
/// `p`. Since right-hand sides only mention their own parameters, one
/// evaluation per vertex decides the local condition.
pub fn validate_evidence_graph(
    g: &EvidenceGraph,
    p: &Pbes,
    bounds: &Bounds,
) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let index = p.equation_index();
    let ranks = p.ranks();
    let proof = g.polarity == Polarity::Proof;

    let mut adjacency: BTreeMap<&Instance, Vec<&Instance>> = BTreeMap::new();
    for (a, b) in &g.edges {
        if !g.vertices.contains(a) || !g.vertices.contains(b) {
            violations.push(Violation::DanglingEdge(a.clone(), b.clone()));
            continue;
        }
        adjacency.entry(a).or_default().push(b);
    }

    let mut rank_of = BTreeMap::new();
    for v in &g.vertices {
        let Some(eq) = index.get(v.variable.as_str()).map(|&i| &p.equations[i]) else {
            violations.push(Violation::NotInSignature(v.clone()));
            continue;
        };
        let sorts_match = eq.parameters.len() == v.arguments.len()
            && eq
                .parameters
                .iter()
                .zip(&v.arguments)
                .all(|((_, s), a)| a.sort() == *s);
        if !sorts_match {
            violations.push(Violation::NotInSignature(v.clone()));
            continue;
        }
        rank_of.insert(v, ranks[index[v.variable.as_str()]]);

        let mut eta = PredicateEnvironment::with_default(!proof);
        for w in adjacency.get(v).into_iter().flatten() {
            eta.set((*w).clone(), proof);
        }
        match eval_predicate_formula(&eq.rhs, &eta, &eq.parameter_env(&v.arguments), bounds) {
            Ok(holds) if holds == proof => {}
            Ok(_) => violations.push(Violation::LocalCondition(v.clone())),
            Err(error) => violations.push(Violation::Evaluation {
                instance: v.clone(),
                error,
            }),
        }
    }

    // An infinite path whose minimal recurring rank r has the wrong parity
    // stays, from some point on, in a strongly connected part of the
    // subgraph of ranks >= r that contains a vertex of rank r.
    let bad: BTreeSet<u32> = rank_of
        .values()
        .copied()
        .filter(|r| (r % 2 == 0) != proof)
        .collect();
    for r in bad {
        let mut graph = DiGraph::<&Instance, ()>::new();
        let mut node = BTreeMap::new();
        for (&v, &rv) in &rank_of {
            if rv >= r {
                node.insert(v, graph.add_node(v));
            }
        }
        for (a, bs) in &adjacency {
            for b in bs {
                if let (Some(&x), Some(&y)) = (node.get(a), node.get(b)) {
                    graph.add_edge(x, y, ());
                }
            }
        }
        for scc in tarjan_scc(&graph) {
            let cyclic = scc.len() > 1 || graph.contains_edge(scc[0], scc[0]);
            if cyclic && scc.iter().any(|&n| rank_of[graph[n]] == r) {
                let mut vertices: Vec<Instance> = scc.iter().map(|&n| graph[n].clone()).collect();
                vertices.sort();
                violations.push(Violation::Parity { rank: r, vertices });
            }
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::{core_of, encode_with_evidence};
    use crate::formula::parse_formula;
    use crate::kernel::Value;
    use crate::model::parse_lpe;
    use crate::pbes::parse_pbes;

    fn example(m: u64) -> Pbes {
        let src = format!(
            "proc L(s : Nat) =\n\
               sum n : Nat . (s == 1 && 0 < n < {m}) -> a . L(s + n)\n\
             + sum n : Nat . (0 < n < s < {m}) -> b . L(s - n)\n\
             + (s == {m}) -> c . L(s);\n\
             init L(1);"
        );
        let model = parse_lpe(&src).unwrap();
        let f = parse_formula("mu X . (<a> X || <b> X || nu Y . <c> Y)").unwrap();
        encode_with_evidence(&model.lpe, &f, &model.init).unwrap()
    }

    fn inst(x: &str, args: &[u64]) -> Instance {
        Instance::new(x, args.iter().map(|a| Value::nat(*a)).collect())
    }

    fn graph(
        polarity: Polarity,
        p: &Pbes,
        edges: &[(Instance, Instance)],
        extra: &[Instance],
    ) -> EvidenceGraph {
        let mut vertices: BTreeSet<Instance> = extra.iter().cloned().collect();
        for (a, b) in edges {
            vertices.insert(a.clone());
            vertices.insert(b.clone());
        }
        EvidenceGraph {
            polarity,
            vertices,
            edges: edges.iter().cloned().collect(),
            ranks: p.rank_map(),
        }
    }

    #[test]
    fn core_relevancy_graph() {
        let core = core_of(&example(3)).unwrap();
        let rg = relevancy_proxy(&core, &Bounds::default()).unwrap();
        let expected_vertices: BTreeSet<Instance> = [
            inst("X", &[1]),
            inst("X", &[2]),
            inst("X", &[3]),
            inst("Y", &[1]),
            inst("Y", &[2]),
            inst("Y", &[3]),
        ]
        .into();
        assert_eq!(rg.vertices, expected_vertices);
        let expected_edges: BTreeSet<(Instance, Instance)> = [
            (inst("X", &[1]), inst("Y", &[1])),
            (inst("X", &[1]), inst("X", &[2])),
            (inst("X", &[2]), inst("X", &[1])),
            (inst("X", &[1]), inst("X", &[3])),
            (inst("X", &[2]), inst("Y", &[2])),
            (inst("X", &[3]), inst("Y", &[3])),
            (inst("Y", &[3]), inst("Y", &[3])),
        ]
        .into();
        assert_eq!(rg.edges, expected_edges);
    }

    #[test]
    fn direct_instantiation_counts() {
        let g = instantiate(&example(3), None, &Bounds::default()).unwrap();
        assert_eq!(g.instance_count(), 14);
        for i in [
            inst("Zp_a", &[1, 2]),
            inst("Zp_a", &[1, 3]),
            inst("Zm_a", &[1, 2]),
            inst("Zm_a", &[1, 3]),
            inst("Zp_b", &[2, 1]),
            inst("Zm_b", &[2, 1]),
            inst("Zp_c", &[3, 3]),
            inst("Zm_c", &[3, 3]),
        ] {
            assert!(g.vertex_of(&i).is_some(), "{i}");
        }
        let rg = RelevancyGraph::from_game(&g);
        assert_eq!(rg.vertices.len(), g.instance_count());
    }

    #[test]
    fn games_are_total_and_ranked() {
        let p = example(4);
        let g = instantiate(&p, None, &Bounds::default()).unwrap();
        let ranks = p.rank_map();
        for v in 0..g.len() {
            assert!(!g.successors[v].is_empty());
            if let Some(i) = g.instance_of(v) {
                assert_eq!(g.priority[v], ranks[&i.variable]);
            }
        }
        let again = instantiate(&p, None, &Bounds::default()).unwrap();
        assert_eq!(g.successors, again.successors);
        assert_eq!(g.instances, again.instances);
    }

    #[test]
    fn single_self_loop() {
        let p = parse_pbes("nu X(n: Nat) = X(n); init X(0);").unwrap();
        let g = instantiate(&p, None, &Bounds::default()).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.successors[0], vec![0]);
        assert_eq!(g.priority[0], 0);
    }

    #[test]
    fn vertex_cap() {
        let p = example(10);
        let bounds = Bounds {
            max_vertices: 20,
            ..Bounds::default()
        };
        let err = instantiate(&p, None, &bounds).unwrap_err();
        assert!(err.is_resource_bound());
    }

    #[test]
    fn validates_the_core_proof_graph() {
        let core = parse_pbes(
            "mu X(s: Nat) = (exists n: Nat . val(s == 1 && 0 < n < 3) && X(s + n)) \
                || (exists n: Nat . val(0 < n < s < 3) && X(s - n)) || Y(s);\n\
             nu Y(s: Nat) = val(s == 3) && Y(s);\n\
             init X(1);",
        )
        .unwrap();
        let b = Bounds::default();
        let (x1, x2, x3, y3) = (
            inst("X", &[1]),
            inst("X", &[2]),
            inst("X", &[3]),
            inst("Y", &[3]),
        );
        let ok = graph(
            Polarity::Proof,
            &core,
            &[
                (x1.clone(), x3.clone()),
                (x3.clone(), y3.clone()),
                (y3.clone(), y3.clone()),
            ],
            &[],
        );
        assert_eq!(validate_evidence_graph(&ok, &core, &b), Ok(()));

        let redirected = graph(
            Polarity::Proof,
            &core,
            &[
                (x1.clone(), x3.clone()),
                (x3.clone(), y3.clone()),
                (y3.clone(), x3.clone()),
            ],
            &[],
        );
        let errs = validate_evidence_graph(&redirected, &core, &b).unwrap_err();
        assert!(
            errs.iter()
                .any(|e| matches!(e, Violation::Parity { rank: 1, .. })),
            "{errs:?}"
        );

        let deleted = graph(
            Polarity::Proof,
            &core,
            &[(x1.clone(), x3.clone()), (y3.clone(), y3.clone())],
            &[],
        );
        let errs = validate_evidence_graph(&deleted, &core, &b).unwrap_err();
        assert_eq!(errs, vec![Violation::LocalCondition(x3.clone())]);

        let odd_cycle = graph(
            Polarity::Proof,
            &core,
            &[(x1.clone(), x2.clone()), (x2.clone(), x1.clone())],
            &[],
        );
        let errs = validate_evidence_graph(&odd_cycle, &core, &b).unwrap_err();
        assert_eq!(
            errs,
            vec![Violation::Parity {
                rank: 1,
                vertices: vec![x1, x2]
            }]
        );
    }

    #[test]
    fn validates_the_evidence_proof_graph() {
        let p = example(3);
        let b = Bounds::default();
        let (x1, x3, y3) = (inst("X", &[1]), inst("X", &[3]), inst("Y", &[3]));
        let (za, zc) = (inst("Zp_a", &[1, 3]), inst("Zp_c", &[3, 3]));
        let edges = [
            (x1.clone(), x3.clone()),
            (x1.clone(), za.clone()),
            (x3.clone(), y3.clone()),
            (y3.clone(), y3.clone()),
            (y3.clone(), zc.clone()),
        ];
        let g = graph(Polarity::Proof, &p, &edges, &[]);
        assert_eq!(validate_evidence_graph(&g, &p, &b), Ok(()));
        let without_witness = graph(Polarity::Proof, &p, &edges[..4], &[zc]);
        assert_eq!(
            validate_evidence_graph(&without_witness, &p, &b),
            Err(vec![Violation::LocalCondition(y3)])
        );
        let foreign = graph(Polarity::Proof, &p, &edges, &[inst("Q", &[1])]);
        assert!(validate_evidence_graph(&foreign, &p, &b).is_err());
    }

    #[test]
    fn refutation_conditions_are_dual() {
        let p = parse_pbes("mu X(n: Nat) = X(n); init X(0);").unwrap();
        let b = Bounds::default();
        let x = inst("X", &[0]);
        let loop_graph = graph(Polarity::Refutation, &p, &[(x.clone(), x.clone())], &[]);
        assert_eq!(validate_evidence_graph(&loop_graph, &p, &b), Ok(()));
        let as_proof = graph(Polarity::Proof, &p, &[(x.clone(), x.clone())], &[]);
        assert!(validate_evidence_graph(&as_proof, &p, &b).is_err());
        let empty = graph(Polarity::Refutation, &p, &[], &[x]);
        assert!(validate_evidence_graph(&empty, &p, &b).is_err());
    }

    #[test]
    fn dot_output_mentions_every_instance() {
        let p = example(3);
        let g = instantiate(&p, None, &Bounds::default()).unwrap();
        let dot = g.to_dot();
        assert!(dot.starts_with("digraph game {"));
        assert!(dot.contains("Zp_a(1, 3)"));
        let rg = RelevancyGraph::from_game(&g).to_dot();
        assert!(rg.contains("\"X(1)\" -> \"X(3)\""));
    }
}
