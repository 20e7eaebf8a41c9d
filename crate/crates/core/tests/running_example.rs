mod common;

use mucheck::encode::encode;
use mucheck::evidence::{evidence_lts, export_aut, self_verify};
use mucheck::formula::parse_formula;
use mucheck::kernel::{Bounds, Value};
use mucheck::model::{explore_lts, Lts};
use mucheck::pbes::{brute_force_solve, Instance};
use mucheck::transform::{run, run_pipeline, Mode};

#[test]
fn encoding_ranks_and_order() {
    let m = common::running_model(3);
    let enc = encode(
        &m.lpe,
        &parse_formula(common::RUNNING_FORMULA).unwrap(),
        &m.init,
    )
    .unwrap();
    let names: Vec<&str> = enc
        .pbes
        .equations
        .iter()
        .map(|e| e.variable.as_str())
        .collect();
    assert_eq!(
        names,
        ["X", "Y", "Zp_a", "Zp_b", "Zp_c", "Zm_a", "Zm_b", "Zm_c"]
    );
    assert_eq!(enc.pbes.ranks(), [1, 2, 2, 2, 2, 3, 3, 3]);
    assert_eq!(enc.pbes.initial, Instance::new("X", vec![Value::nat(1)]));
}

#[test]
fn full_lts_export() {
    let m = common::running_model(3);
    let lts = explore_lts(&m.lpe, &m.init, &Bounds::default()).unwrap();
    let aut = export_aut(&lts);
    assert!(aut.starts_with("des (0, 4, 3)\n"), "{aut}");
    assert_eq!(aut.lines().count(), 5);
}

#[test]
fn trivial_formula_has_empty_witness() {
    let m = common::running_model(3);
    let f = parse_formula("nu T . true").unwrap();
    let b = Bounds::default();
    let out = run_pipeline(&m.lpe, &f, &m.init, &b).unwrap();
    assert!(out.verdict);
    let lts = evidence_lts(
        out.evidence.as_ref().unwrap(),
        &m.lpe,
        &m.init,
        &out.encoding.evidence,
        &b,
    )
    .unwrap();
    assert_eq!(export_aut(&lts), "des (0, 0, 1)\n");
}

#[test]
fn other_initial_state_matches_brute_force() {
    let mut m = common::running_model(3);
    m.init = Value::nat(2);
    let f = parse_formula("mu V . <b> V || nu W . <c> W").unwrap();
    let b = Bounds::default();
    let e = encode(&m.lpe, &f, &m.init).unwrap().pbes;
    let expected = brute_force_solve(&e, &b).unwrap().get(&e.initial);
    for mode in [Mode::Plain, Mode::Direct, Mode::TwoStep] {
        assert_eq!(
            run(&m.lpe, &f, &m.init, mode, &b).unwrap().verdict,
            expected,
            "{mode:?}"
        );
    }
    // From 2 the only move is b back to 1, which has no b-successor.
    assert!(!expected);
}

#[test]
fn witness1000_is_a_two_transition_witness() {
    let m = common::running_model(1000);
    let f = parse_formula(common::RUNNING_FORMULA).unwrap();
    let b = Bounds::default();
    let out = run_pipeline(&m.lpe, &f, &m.init, &b).unwrap();
    assert_eq!(out.stats.phase1_vertices, Some(2000));
    assert_eq!(out.stats.phase2_vertices, Some(5));
    let lts: Lts = evidence_lts(
        out.evidence.as_ref().unwrap(),
        &m.lpe,
        &m.init,
        &out.encoding.evidence,
        &b,
    )
    .unwrap();
    assert_eq!(lts.states.len(), 2);
    assert_eq!(lts.transitions.len(), 2);
    assert!(lts
        .transitions
        .contains(&(Value::nat(1000), "c".into(), Value::nat(1000))));
    assert!(self_verify(&lts, &m.lpe.alphabet, &f, &b).unwrap());
}
