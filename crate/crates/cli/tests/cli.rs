use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const FORMULA: &str = "mu X . (<a> X || <b> X || nu Y . <c> Y)";

fn model(m: u64) -> String {
    format!(
        "% jumps from 1, steps back, loops at {m}\n\
         proc L(s : Nat) =\n\
           sum n : Nat . (s == 1 && 0 < n < {m}) -> a . L(s + n)\n\
         + sum n : Nat . (0 < n < s < {m}) -> b . L(s - n)\n\
         + (s == {m}) -> c . L(s);\n\
         init L(1);\n"
    )
}

fn setup(m: u64) -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("model.lpe"), model(m)).unwrap();
    fs::write(dir.path().join("prop.mcf"), FORMULA).unwrap();
    dir
}

fn check(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_check"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn witness1000_two_step() {
    let dir = setup(1000);
    let out = check(
        dir.path(),
        &[
            "model.lpe",
            "prop.mcf",
            "--mode=two-step",
            "--stats=s.json",
            "--evidence=w.aut",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "true");
    let stats: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(stats["phase1_vertices"], 2000);
    assert_eq!(stats["phase2_vertices"], 5);
    assert_eq!(stats["verdict"], true);
    assert!(stats["wall_times_ms"]["phase1_solve"].is_number());
    let aut = fs::read_to_string(dir.path().join("w.aut")).unwrap();
    assert!(aut.starts_with("des (0, 2, 2)"), "{aut}");
}

#[test]
fn plain_mode_writes_no_evidence() {
    let dir = setup(3);
    let out = check(
        dir.path(),
        &["model.lpe", FORMULA, "--mode=plain", "--evidence=w.aut"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(!dir.path().join("w.aut").exists());
}

#[test]
fn modes_agree_and_outputs_are_deterministic() {
    let dir = setup(3);
    let mut files = Vec::new();
    for mode in ["direct", "two-step", "two-step"] {
        let name = format!("{mode}-{}.aut", files.len());
        let out = check(
            dir.path(),
            &[
                "model.lpe",
                "prop.mcf",
                &format!("--mode={mode}"),
                &format!("--evidence={name}"),
            ],
        );
        assert_eq!(out.status.code(), Some(0));
        files.push(fs::read_to_string(dir.path().join(name)).unwrap());
    }
    assert_eq!(files[1], files[2]);
    assert_eq!(files[1], "des (0, 2, 2)\n(0,\"a\",1)\n(1,\"c\",1)\n");
}

#[test]
fn failing_property_and_dot_counterexample() {
    let dir = setup(3);
    let out = check(
        dir.path(),
        &[
            "model.lpe",
            "nu X . [a] X && [b] X && <c> true",
            "--evidence=ce.dot",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "false");
    let dot = fs::read_to_string(dir.path().join("ce.dot")).unwrap();
    assert!(dot.starts_with("digraph lts {"));
    assert!(dot.contains("doublecircle"));
}

#[test]
fn input_errors_exit_2() {
    let dir = setup(3);
    assert_eq!(
        check(dir.path(), &["missing.lpe", FORMULA]).status.code(),
        Some(2)
    );
    assert_eq!(
        check(dir.path(), &["model.lpe", "mu X . <a> Y"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        check(dir.path(), &["model.lpe", "mu X . <d> X"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        check(dir.path(), &["model.lpe", FORMULA, "--evidence=w.txt"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        check(dir.path(), &["model.lpe", FORMULA, "--mode=fast"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn resource_bounds_exit_3() {
    let dir = setup(50);
    let out = check(dir.path(), &["model.lpe", FORMULA, "--max-vertices=10"]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = check(dir.path(), &["model.lpe", FORMULA, "--quantifier-cap=5"]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    fs::write(
        dir.path().join("open.lpe"),
        "proc L(s : Nat) = sum n : Nat . (s < n) -> a . L(n); init L(0);",
    )
    .unwrap();
    let out = check(dir.path(), &["open.lpe", "mu X . <a> true"]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
