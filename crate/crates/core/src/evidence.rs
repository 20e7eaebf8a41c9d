//! Evidence transition systems read off proof and refutation graphs, and
//! their export.
//!
//! Every instance `Z_α(d, g)` of the evidence variables on the graph's side
//! (`Zp` for a proof, `Zm` for a refutation) stands for the transition
//! `d --α--> g` of the model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::encode::{EvidenceVariables, Side};
use crate::formula::MuFormula;
use crate::graphs::{EvidenceGraph, Polarity};
use crate::kernel::{Bounds, EvalError, Value};
use crate::model::{Lpe, Lts};
use crate::transform::{run, Mode, PipelineError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvidenceError {
    #[error("evidence transition {from} --{action}--> {to} is not a transition of the model")]
    DanglingEvidence {
        from: Value,
        action: String,
        to: Value,
    },
    #[error("evidence instance {0} does not have two arguments")]
    Shape(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// The transitions witnessed by `g`, checked against `lpe`.
pub fn evidence_lts(
    g: &EvidenceGraph,
    lpe: &Lpe,
    init: &Value,
    vars: &EvidenceVariables,
    bounds: &Bounds,
) -> Result<Lts, EvidenceError> {
    let side = match g.polarity {
        Polarity::Proof => Side::Plus,
        Polarity::Refutation => Side::Minus,
    };
    let mut states = BTreeSet::from([init.clone()]);
    let mut transitions = BTreeSet::new();
    for v in &g.vertices {
        let Some((label, s)) = vars.label_of(&v.variable) else {
            continue;
        };
        if s != side {
            continue;
        }
        let [from, to] = v.arguments.as_slice() else {
            return Err(EvidenceError::Shape(v.to_string()));
        };
        if !lpe.has_transition(from, label, to, bounds)? {
            return Err(EvidenceError::DanglingEvidence {
                from: from.clone(),
                action: label.to_string(),
                to: to.clone(),
            });
        }
        states.insert(from.clone());
        states.insert(to.clone());
        transitions.insert((from.clone(), label.to_string(), to.clone()));
    }
    Ok(Lts {
        initial: init.clone(),
        states,
        transitions,
    })
}

fn indices(lts: &Lts) -> BTreeMap<&Value, usize> {
    lts.state_order()
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect()
}

/// The transition system in Aldebaran format, states numbered in
/// breadth-first order from the initial state.
pub fn export_aut(lts: &Lts) -> String {
    let index = indices(lts);
    let mut out = format!("des (0, {}, {})\n", lts.transitions.len(), lts.states.len());
    let mut rows: Vec<(usize, &str, usize)> = lts
        .transitions
        .iter()
        .map(|(a, l, b)| (index[a], l.as_str(), index[b]))
        .collect();
    rows.sort();
    for (a, l, b) in rows {
        let _ = writeln!(out, "({a},\"{l}\",{b})");
    }
    out
}

pub fn lts_to_dot(lts: &Lts) -> String {
    let index = indices(lts);
    let mut out = String::from("digraph lts {\n  node [shape=circle];\n");
    for (s, i) in &index {
        let shape = if **s == lts.initial {
            ", shape=doublecircle"
        } else {
            ""
        };
        let _ = writeln!(out, "  s{i} [label=\"{s}\"{shape}];");
    }
    for (a, l, b) in &lts.transitions {
        let _ = writeln!(out, "  s{} -> s{} [label=\"{l}\"];", index[a], index[b]);
    }
    out.push_str("}\n");
    out
}

/// Re-checks `phi` on the evidence transition system itself. A proof's
/// evidence satisfies the formula and a refutation's violates it, so the
/// result should equal the original verdict.
pub fn self_verify(
    lts: &Lts,
    alphabet: &BTreeSet<String>,
    phi: &MuFormula,
    bounds: &Bounds,
) -> Result<bool, PipelineError> {
    let m = lts.to_model(alphabet);
    Ok(run(&m.lpe, phi, &m.init, Mode::Plain, bounds)?.verdict)
}
