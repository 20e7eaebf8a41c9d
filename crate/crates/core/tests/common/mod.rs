#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mucheck::formula::MuFormula;
use mucheck::kernel::Value;
use mucheck::model::{parse_lpe, Lts, Model};
use rand::seq::SliceRandom;
use rand::Rng;

pub const RUNNING_FORMULA: &str = "mu X . (<a> X || <b> X || nu Y . <c> Y)";

/// The three-summand process with jumps from 1, steps back below `m`, and a
/// `c`-loop at `m`.
pub fn running_model(m: u64) -> Model {
    parse_lpe(&format!(
        "proc L(s : Nat) =\n\
           sum n : Nat . (s == 1 && 0 < n < {m}) -> a . L(s + n)\n\
         + sum n : Nat . (0 < n < s < {m}) -> b . L(s - n)\n\
         + (s == {m}) -> c . L(s);\n\
         init L(1);"
    ))
    .expect("running model parses")
}

pub fn golden() -> Vec<(Model, MuFormula)> {
    use mucheck::formula::parse_formula;
    let toggle = parse_lpe(
        "act a, b;\n\
         proc T(on : Bool) = (on) -> a . T(false) + (!on) -> b . T(true) + (on) -> c . T(on);\n\
         init T(false);",
    )
    .unwrap();
    let cases: Vec<(Model, &str)> = vec![
        (running_model(3), RUNNING_FORMULA),
        (running_model(3), "mu V . <b> V || nu W . <c> W"),
        (running_model(4), "nu X . [a] X && [b] X && <c> true"),
        (
            running_model(4),
            "nu X . [a] X && [b] X && (<a> true || <b> true || <c> true)",
        ),
        (running_model(5), "mu X . [b] X && <c> true"),
        (running_model(5), "nu X . mu Y . <a> X || <b> Y || <c> X"),
        (toggle.clone(), "nu X . <b> <a> X"),
        (toggle.clone(), "nu X . [a] X && [b] X && <c> true"),
        (toggle, "mu X . <c> true || [b] X"),
    ];
    cases
        .into_iter()
        .map(|(m, f)| (m, parse_formula(f).unwrap()))
        .collect()
}

/// States range over `0..k`.
pub fn random_model<R: Rng>(rng: &mut R, k: u64) -> Model {
    let labels = ["a", "b", "c"];
    let guard = |rng: &mut R| -> String {
        let i = rng.gen_range(0..k);
        match rng.gen_range(0..5) {
            0 => "true".into(),
            1 => format!("s == {i}"),
            2 => format!("s < {i}"),
            3 => format!("{i} < s"),
            _ => format!("!(s == {i})"),
        }
    };
    let n = rng.gen_range(1..=4);
    let mut summands = Vec::new();
    for _ in 0..n {
        let a = labels.choose(rng).unwrap();
        let g = guard(rng);
        let s = match rng.gen_range(0..4) {
            0 => format!("({g}) -> {a} . L({})", rng.gen_range(0..k)),
            1 => format!("(s < {} && {g}) -> {a} . L(s + 1)", k - 1),
            2 => format!("(0 < s && {g}) -> {a} . L(s - 1)"),
            _ => format!(
                "sum n : Nat . (n < {k} && {g} && !(n == {})) -> {a} . L(n)",
                rng.gen_range(0..k)
            ),
        };
        summands.push(s);
    }
    let init = rng.gen_range(0..k);
    parse_lpe(&format!(
        "act a, b, c;\nproc L(s : Nat) = {};\ninit L({init});",
        summands.join(" + ")
    ))
    .expect("generated model parses")
}

/// A closed formula with a fixpoint at the top and at most `binders`
/// binders, all distinctly named.
pub fn random_formula<R: Rng>(rng: &mut R, binders: usize) -> MuFormula {
    fn go<R: Rng>(rng: &mut R, depth: u32, scope: &mut Vec<String>, left: &mut usize) -> MuFormula {
        let labels = ["a", "b", "c"];
        let leaf = depth == 0 || rng.gen_bool(0.2);
        if leaf {
            if !scope.is_empty() && rng.gen_bool(0.7) {
                return MuFormula::var(scope.choose(rng).unwrap());
            }
            return MuFormula::Bool(rng.gen_bool(0.5));
        }
        match rng.gen_range(0..6) {
            0 => MuFormula::and(
                go(rng, depth - 1, scope, left),
                go(rng, depth - 1, scope, left),
            ),
            1 => MuFormula::or(
                go(rng, depth - 1, scope, left),
                go(rng, depth - 1, scope, left),
            ),
            2 => MuFormula::diamond(labels.choose(rng).unwrap(), go(rng, depth - 1, scope, left)),
            3 => MuFormula::boxed(labels.choose(rng).unwrap(), go(rng, depth - 1, scope, left)),
            _ if *left > 0 => fixpoint(rng, depth - 1, scope, left),
            _ => MuFormula::diamond(labels.choose(rng).unwrap(), go(rng, depth - 1, scope, left)),
        }
    }
    fn fixpoint<R: Rng>(
        rng: &mut R,
        depth: u32,
        scope: &mut Vec<String>,
        left: &mut usize,
    ) -> MuFormula {
        *left -= 1;
        let name = format!("X{}", scope.len() + 10 * *left);
        scope.push(name.clone());
        let body = go(rng, depth, scope, left);
        scope.pop();
        if rng.gen_bool(0.5) {
            MuFormula::mu(&name, body)
        } else {
            MuFormula::nu(&name, body)
        }
    }
    let mut left = binders.max(1);
    fixpoint(rng, 4, &mut Vec::new(), &mut left)
}

/// Set semantics of a closed formula on an explicit transition system:
/// the states satisfying it.
pub fn semantics(lts: &Lts, phi: &MuFormula) -> BTreeSet<Value> {
    fn eval(
        lts: &Lts,
        phi: &MuFormula,
        env: &mut BTreeMap<String, BTreeSet<Value>>,
    ) -> BTreeSet<Value> {
        match phi {
            MuFormula::Bool(true) => lts.states.clone(),
            MuFormula::Bool(false) => BTreeSet::new(),
            MuFormula::Var(x) => env[x].clone(),
            MuFormula::And(a, b) => {
                let a = eval(lts, a, env);
                eval(lts, b, env).intersection(&a).cloned().collect()
            }
            MuFormula::Or(a, b) => {
                let mut a = eval(lts, a, env);
                a.extend(eval(lts, b, env));
                a
            }
            MuFormula::Diamond(l, g) => {
                let target = eval(lts, g, env);
                lts.states
                    .iter()
                    .filter(|s| {
                        lts.transitions
                            .iter()
                            .any(|(f, m, t)| f == *s && m == l && target.contains(t))
                    })
                    .cloned()
                    .collect()
            }
            MuFormula::Box(l, g) => {
                let target = eval(lts, g, env);
                lts.states
                    .iter()
                    .filter(|s| {
                        lts.transitions
                            .iter()
                            .all(|(f, m, t)| f != *s || m != l || target.contains(t))
                    })
                    .cloned()
                    .collect()
            }
            MuFormula::Fixpoint(sigma, x, g) => {
                let mut current = match sigma {
                    mucheck::formula::Fixpoint::Mu => BTreeSet::new(),
                    mucheck::formula::Fixpoint::Nu => lts.states.clone(),
                };
                let saved = env.get(x).cloned();
                loop {
                    env.insert(x.clone(), current.clone());
                    let next = eval(lts, g, env);
                    if next == current {
                        break;
                    }
                    current = next;
                }
                match saved {
                    Some(s) => env.insert(x.clone(), s),
                    None => env.remove(x),
                };
                current
            }
        }
    }
    eval(lts, phi, &mut BTreeMap::new())
}
