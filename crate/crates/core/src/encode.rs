//! Translation of a formula and a linear process into an equation system
//! that records evidence, and the substitutions that remove that evidence.
//!
//! For every action `α` the encoding adds `nu Zp_α(d, d1) = true` and
//! `mu Zm_α(d, d1) = false`. A modal step `<α>φ` through a summand with
//! condition `c` and effect `g` becomes
//! `exists e . c && ((RHS(φ)[g/d] || Zm_α(d, g)) && Zp_α(d, g))`, and `[α]φ`
//! the dual `forall e . !c || ((RHS(φ)[g/d] && Zp_α(d, g)) || Zm_α(d, g))`.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{fresh_name, Fixpoint, MuFormula};
use crate::kernel::{Term, Value};
use crate::model::Lpe;
use crate::pbes::{Equation, Instance, Pbes, PredicateFormula};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("action `{0}` is not in the alphabet of the process")]
    ActionNotInAlphabet(String),
    #[error("the formula must start with a fixpoint")]
    NotAFixpoint,
    #[error("free fixpoint variable `{0}`")]
    OpenFormula(String),
    #[error("unexpected equation system shape: {0}")]
    Shape(String),
}

/// Names of the evidence variables, per action label.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EvidenceVariables {
    pub plus: BTreeMap<String, String>,
    pub minus: BTreeMap<String, String>,
}

/// Whether an evidence variable belongs to the witness or counterexample side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

impl EvidenceVariables {
    /// The label and side of an evidence variable.
    pub fn label_of(&self, variable: &str) -> Option<(&str, Side)> {
        fn find<'a>(m: &'a BTreeMap<String, String>, variable: &str) -> Option<&'a str> {
            m.iter()
                .find(|(_, v)| v.as_str() == variable)
                .map(|(l, _)| l.as_str())
        }
        find(&self.plus, variable)
            .map(|l| (l, Side::Plus))
            .or_else(|| find(&self.minus, variable).map(|l| (l, Side::Minus)))
    }

    pub fn contains(&self, variable: &str) -> bool {
        self.label_of(variable).is_some()
    }
}

/// An evidence-carrying equation system together with its evidence variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encoding {
    pub pbes: Pbes,
    pub evidence: EvidenceVariables,
}

pub fn encode_with_evidence(lpe: &Lpe, phi: &MuFormula, init: &Value) -> Result<Pbes, EncodeError> {
    Ok(encode(lpe, phi, init)?.pbes)
}

pub fn encode(lpe: &Lpe, phi: &MuFormula, init: &Value) -> Result<Encoding, EncodeError> {
    if let Some(x) = phi.free_vars().into_iter().next() {
        return Err(EncodeError::OpenFormula(x));
    }
    let phi = phi.rename_apart();
    let MuFormula::Fixpoint(_, top, _) = &phi else {
        return Err(EncodeError::NotAFixpoint);
    };
    if let Some(a) = phi.labels().into_iter().find(|a| !lpe.alphabet.contains(a)) {
        return Err(EncodeError::ActionNotInAlphabet(a));
    }

    let mut used: BTreeSet<String> = phi
        .bound_vars_in_order()
        .into_iter()
        .map(|(_, x)| x)
        .collect();
    let mut evidence = EvidenceVariables::default();
    for a in &lpe.alphabet {
        let p = fresh_name(&format!("Zp_{a}"), &used);
        used.insert(p.clone());
        evidence.plus.insert(a.clone(), p);
    }
    for a in &lpe.alphabet {
        let m = fresh_name(&format!("Zm_{a}"), &used);
        used.insert(m.clone());
        evidence.minus.insert(a.clone(), m);
    }

    let enc = Encoder {
        lpe,
        evidence: &evidence,
    };
    let mut equations = Vec::new();
    enc.equations(&phi, &mut equations);

    let (d, sort) = &lpe.parameter;
    let d1 = format!("{d}1");
    let params = vec![(d.clone(), *sort), (d1, *sort)];
    for (block, fixpoint, value) in [
        (&evidence.plus, Fixpoint::Nu, true),
        (&evidence.minus, Fixpoint::Mu, false),
    ] {
        for z in block.values() {
            equations.push(Equation {
                fixpoint,
                variable: z.clone(),
                parameters: params.clone(),
                rhs: PredicateFormula::Data(Term::Const(Value::Bool(value))),
            });
        }
    }

    let pbes = Pbes {
        equations,
        initial: Instance::new(top.clone(), vec![init.clone()]),
    };
    Ok(Encoding { pbes, evidence })
}

struct Encoder<'a> {
    lpe: &'a Lpe,
    evidence: &'a EvidenceVariables,
}

impl Encoder<'_> {
    fn param(&self) -> Term {
        let (d, s) = &self.lpe.parameter;
        Term::var(d, *s)
    }

    fn equations(&self, phi: &MuFormula, out: &mut Vec<Equation>) {
        match phi {
            MuFormula::Bool(_) | MuFormula::Var(_) => {}
            MuFormula::And(a, b) | MuFormula::Or(a, b) => {
                self.equations(a, out);
                self.equations(b, out);
            }
            MuFormula::Box(_, f) | MuFormula::Diamond(_, f) => self.equations(f, out),
            MuFormula::Fixpoint(sigma, x, f) => {
                out.push(Equation {
                    fixpoint: *sigma,
                    variable: x.clone(),
                    parameters: vec![self.lpe.parameter.clone()],
                    rhs: self.rhs(f),
                });
                self.equations(f, out);
            }
        }
    }

    fn rhs(&self, phi: &MuFormula) -> PredicateFormula {
        match phi {
            MuFormula::Bool(b) => PredicateFormula::Data(Term::Const(Value::Bool(*b))),
            MuFormula::Var(x) | MuFormula::Fixpoint(_, x, _) => {
                PredicateFormula::call(x, vec![self.param()])
            }
            MuFormula::And(a, b) => PredicateFormula::and(self.rhs(a), self.rhs(b)),
            MuFormula::Or(a, b) => PredicateFormula::or(self.rhs(a), self.rhs(b)),
            MuFormula::Diamond(a, f) => self.modality(a, f, false),
            MuFormula::Box(a, f) => self.modality(a, f, true),
        }
    }

    fn modality(&self, label: &str, body: &MuFormula, universal: bool) -> PredicateFormula {
        let d = &self.lpe.parameter.0;
        let inner = self.rhs(body);
        let zp = &self.evidence.plus[label];
        let zm = &self.evidence.minus[label];
        let clauses = self
            .lpe
            .summands
            .iter()
            .filter(|s| s.action == label)
            .map(|s| {
                let g = &s.next_state;
                let next = inner.substitute(d, g);
                let plus = PredicateFormula::call(zp, vec![self.param(), g.clone()]);
                let minus = PredicateFormula::call(zm, vec![self.param(), g.clone()]);
                let clause = if universal {
                    PredicateFormula::or(
                        PredicateFormula::Data(Term::not(s.condition.clone())),
                        PredicateFormula::or(PredicateFormula::and(next, plus), minus),
                    )
                } else {
                    PredicateFormula::and(
                        PredicateFormula::Data(s.condition.clone()),
                        PredicateFormula::and(PredicateFormula::or(next, minus), plus),
                    )
                };
                match (&s.local, universal) {
                    (None, _) => clause,
                    (Some((e, sort)), false) => PredicateFormula::exists(e, *sort, clause),
                    (Some((e, sort)), true) => PredicateFormula::forall(e, *sort, clause),
                }
            });
        if universal {
            PredicateFormula::conjunction(clauses)
        } else {
            PredicateFormula::disjunction(clauses)
        }
    }
}

/// Splits an encoded system into the number of leading formula equations
/// and the names of the trailing greatest-`true` and least-`false` blocks.
pub fn evidence_blocks(p: &Pbes) -> Result<(usize, Vec<String>, Vec<String>), EncodeError> {
    let is_z = |e: &Equation, sigma: Fixpoint, value: bool| {
        e.fixpoint == sigma && e.parameters.len() == 2 && e.rhs.as_bool_const() == Some(value)
    };
    let n = p.equations.len();
    let k = p
        .equations
        .iter()
        .rev()
        .take_while(|e| is_z(e, Fixpoint::Mu, false))
        .count();
    if 2 * k > n {
        return Err(EncodeError::Shape(format!(
            "{k} trailing least-fixpoint evidence equations but only {n} equations"
        )));
    }
    let core = n - 2 * k;
    let plus = &p.equations[core..n - k];
    if let Some(e) = plus.iter().find(|e| !is_z(e, Fixpoint::Nu, true)) {
        return Err(EncodeError::Shape(format!(
            "`{}` should be a greatest-fixpoint evidence equation",
            e.variable
        )));
    }
    let names = |es: &[Equation]| es.iter().map(|e| e.variable.clone()).collect::<Vec<_>>();
    Ok((core, names(plus), names(&p.equations[n - k..])))
}

/// Replaces calls of the given variables by constants in the formula
/// equations, then folds constants. Evidence equations are kept verbatim.
fn eliminate(p: &Pbes, replace: &BTreeMap<String, bool>) -> Result<Pbes, EncodeError> {
    let (core, _, _) = evidence_blocks(p)?;
    let mut out = p.clone();
    for e in &mut out.equations[..core] {
        e.rhs = e
            .rhs
            .map_calls(&mut |x, _| {
                replace
                    .get(x)
                    .map(|b| PredicateFormula::Data(Term::Const(Value::Bool(*b))))
            })
            .simplify();
    }
    Ok(out)
}

/// `Zp := true`, `Zm := false`: the plain model-checking system.
pub fn core_of(p: &Pbes) -> Result<Pbes, EncodeError> {
    let (_, plus, minus) = evidence_blocks(p)?;
    let replace = plus
        .into_iter()
        .map(|z| (z, true))
        .chain(minus.into_iter().map(|z| (z, false)))
        .collect();
    eliminate(p, &replace)
}

/// For a true solution removes the counterexample side (`Zm := false`); for
/// a false solution the witness side (`Zp := true`).
pub fn strip_for_polarity(p: &Pbes, solution_is_true: bool) -> Result<Pbes, EncodeError> {
    let (_, plus, minus) = evidence_blocks(p)?;
    let replace = if solution_is_true {
        minus.into_iter().map(|z| (z, false)).collect()
    } else {
        plus.into_iter().map(|z| (z, true)).collect()
    };
    eliminate(p, &replace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::kernel::Bounds;
    use crate::model::parse_lpe;
    use crate::pbes::{brute_force_solve, parse_pbes};

    const MODEL: &str = "proc L(s : Nat) =\n\
        sum n : Nat . (s == 1 && 0 < n < 3) -> a . L(s + n)\n\
      + sum n : Nat . (0 < n < s < 3) -> b . L(s - n)\n\
      + (s == 3) -> c . L(s);\n\
      init L(1);";
    const FORMULA: &str = "mu X . (<a> X || <b> X || nu Y . <c> Y)";

    fn example() -> Pbes {
        let m = parse_lpe(MODEL).unwrap();
        encode_with_evidence(&m.lpe, &parse_formula(FORMULA).unwrap(), &m.init).unwrap()
    }

    #[test]
    fn encodes_the_running_example() {
        let expected = parse_pbes(
            "mu X(s: Nat) = \
               (exists n: Nat . val(s == 1 && 0 < n < 3) && ((X(s + n) || Zm_a(s, s + n)) && Zp_a(s, s + n))) \
            || (exists n: Nat . val(0 < n < s < 3) && ((X(s - n) || Zm_b(s, s - n)) && Zp_b(s, s - n))) \
            || Y(s);\n\
             nu Y(s: Nat) = val(s == 3) && ((Y(s) || Zm_c(s, s)) && Zp_c(s, s));\n\
             nu Zp_a(s: Nat, s1: Nat) = true;\n\
             nu Zp_b(s: Nat, s1: Nat) = true;\n\
             nu Zp_c(s: Nat, s1: Nat) = true;\n\
             mu Zm_a(s: Nat, s1: Nat) = false;\n\
             mu Zm_b(s: Nat, s1: Nat) = false;\n\
             mu Zm_c(s: Nat, s1: Nat) = false;\n\
             init X(1);",
        )
        .unwrap();
        let p = example();
        p.check().unwrap();
        assert_eq!(p, expected);
        assert_eq!(p.ranks(), vec![1, 2, 2, 2, 2, 3, 3, 3]);
    }

    #[test]
    fn degenerate_formula() {
        let m = parse_lpe(MODEL).unwrap();
        let p =
            encode_with_evidence(&m.lpe, &parse_formula("nu T . true").unwrap(), &m.init).unwrap();
        assert_eq!(p.equations.len(), 7);
        assert_eq!(p.equations[0].to_string(), "nu T(s: Nat) = true;");
        assert_eq!(
            encode_with_evidence(&m.lpe, &parse_formula("true").unwrap(), &m.init),
            Err(EncodeError::NotAFixpoint)
        );
    }

    #[test]
    fn box_is_dual() {
        let m = parse_lpe(MODEL).unwrap();
        let p =
            encode_with_evidence(&m.lpe, &parse_formula("nu X . [a] X").unwrap(), &m.init).unwrap();
        assert_eq!(
            p.equations[0].rhs.to_string(),
            "forall n: Nat . val(!(s == 1 && (0 < n && n < 3))) || (X(s + n) && Zp_a(s, s + n) || Zm_a(s, s + n))"
        );
    }

    #[test]
    fn unknown_action_is_rejected() {
        let m = parse_lpe(MODEL).unwrap();
        assert_eq!(
            encode_with_evidence(&m.lpe, &parse_formula("nu X . <d> X").unwrap(), &m.init),
            Err(EncodeError::ActionNotInAlphabet("d".into()))
        );
    }

    #[test]
    fn user_names_do_not_collide_with_evidence_names() {
        let m = parse_lpe(MODEL).unwrap();
        let p = encode_with_evidence(
            &m.lpe,
            &parse_formula("nu Zp_a . <a> Zp_a").unwrap(),
            &m.init,
        )
        .unwrap();
        let names: Vec<&str> = p.equations.iter().map(|e| e.variable.as_str()).collect();
        assert_eq!(
            names,
            ["Zp_a", "Zp_a1", "Zp_b", "Zp_c", "Zm_a", "Zm_b", "Zm_c"]
        );
    }

    #[test]
    fn nested_modalities_avoid_capture() {
        let m = parse_lpe(MODEL).unwrap();
        let p = encode_with_evidence(&m.lpe, &parse_formula("mu X . <a> <a> X").unwrap(), &m.init)
            .unwrap();
        p.check().unwrap();
        let rhs = p.equations[0].rhs.to_string();
        assert!(
            rhs.contains("exists n1: Nat . val(s + n == 1 && (0 < n1 && n1 < 3))"),
            "{rhs}"
        );
    }

    #[test]
    fn core_of_matches_plain_encoding() {
        let core = core_of(&example()).unwrap();
        let expected = parse_pbes(
            "mu X(s: Nat) = \
               (exists n: Nat . val(s == 1 && 0 < n < 3) && X(s + n)) \
            || (exists n: Nat . val(0 < n < s < 3) && X(s - n)) \
            || Y(s);\n\
             nu Y(s: Nat) = val(s == 3) && Y(s);\n\
             init X(1);",
        )
        .unwrap();
        assert_eq!(core.equations[..2], expected.equations[..]);
        assert_eq!(core.equations[2..], example().equations[2..]);
    }

    #[test]
    fn strip_keeps_one_side() {
        let p = example();
        let t = strip_for_polarity(&p, true).unwrap();
        let occ = t.equations[0].rhs.occurring_variables();
        assert!(occ.contains("Zp_a") && occ.contains("Zp_b") && !occ.contains("Zm_a"));
        assert_eq!(
            t.equations[1].rhs.to_string(),
            "val(s == 3) && (Y(s) && Zp_c(s, s))"
        );
        let both = strip_for_polarity(&t, false).unwrap();
        assert_eq!(both, core_of(&p).unwrap());
    }

    #[test]
    fn substitutions_preserve_the_solution() {
        let p = example();
        let b = Bounds::default();
        let full = brute_force_solve(&p, &b).unwrap();
        for q in [core_of(&p).unwrap(), strip_for_polarity(&p, true).unwrap()] {
            let sol = brute_force_solve(&q, &b).unwrap();
            for v in 1..=3 {
                for x in ["X", "Y"] {
                    let i = Instance::new(x, vec![Value::nat(v)]);
                    assert_eq!(sol.get(&i), full.get(&i), "{i}");
                }
            }
        }
    }

    #[test]
    fn shape_errors() {
        let p = parse_pbes("mu X(s: Nat) = X(s); init X(0);").unwrap();
        assert_eq!(core_of(&p).unwrap(), p);
        let q =
            parse_pbes("mu X(s: Nat) = X(s); mu Zm(s: Nat, t: Nat) = false; init X(0);").unwrap();
        assert!(matches!(core_of(&q), Err(EncodeError::Shape(_))));
    }
}
