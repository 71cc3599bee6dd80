use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_setmedian"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SETS: &str = r#"{"d": 2, "sets": [[[0, 0], [1, 0]], [[4, 0]], [[2, 3], [2, -3]], [[0, 5]]]}"#;
const PROB: &str = r#"{"d": 2, "distributions": [
    {"entries": [{"loc": [0, 0], "p": 0.5}, {"loc": [1, 1], "p": 0.2}, {"loc": null, "p": 0.3}]},
    {"entries": [{"loc": [3, 0], "p": 1.0}]},
    {"entries": [{"loc": [0, 4], "p": 0.6}, {"loc": null, "p": 0.4}]}
]}"#;
const LOW_MASS: &str = r#"{"d": 2, "distributions": [
    {"entries": [{"loc": [0, 0], "p": 0.02}, {"loc": null, "p": 0.98}]},
    {"entries": [{"loc": [4, 0], "p": 0.03}, {"loc": null, "p": 0.97}]},
    {"entries": [{"loc": [0, 3], "p": 0.01}, {"loc": null, "p": 0.99}]}
]}"#;

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn setmedian_result_shape() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "sets.json", SETS);
    let v = json(&run(&["setmedian", "--in", input.to_str().unwrap(), "--seed", "4", "--epsilon", "0.2"]));
    assert_eq!(v["center"].as_array().unwrap().len(), 2);
    assert!(v["cost"].as_f64().unwrap() > 0.0);
    assert!(v["diagnostics"]["iterations_total"].as_u64().unwrap() > 0);
    assert_eq!(v["config_echo"]["seed"], 4);
    assert_eq!(v["config_echo"]["epsilon"], 0.2);
    assert_eq!(v["config_echo"]["mode"], "practical");
}

#[test]
fn pseb_reports_case() {
    let dir = tempfile::tempdir().unwrap();
    let two = write(dir.path(), "p.json", PROB);
    let one = write(dir.path(), "low.json", LOW_MASS);
    let v = json(&run(&["pseb", "--epsilon", "0.1", "--seed", "7", "--in", two.to_str().unwrap()]));
    assert_eq!(v["diagnostics"]["case"], 2);
    assert_eq!(v["cost_kind"], "exact");
    let v = json(&run(&["pseb", "--epsilon", "0.1", "--seed", "7", "--in", one.to_str().unwrap()]));
    assert_eq!(v["diagnostics"]["case"], 1);
}

#[test]
fn psvdd_serializes_implicit_center() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.json", PROB);
    let v = json(&run(&[
        "psvdd", "--kernel", "rbf", "--rbf-sigma", "1.0", "--epsilon", "0.2", "--in", input.to_str().unwrap(),
    ]));
    let terms = v["implicit_center"].as_array().unwrap();
    assert!(!terms.is_empty());
    let sum: f64 = terms.iter().map(|t| t["gamma"].as_f64().unwrap()).sum();
    assert!((sum - 1.0).abs() < 1e-9);
    assert_eq!(terms[0]["loc"].as_array().unwrap().len(), 2);
    assert_eq!(v["config_echo"]["kernel"]["kind"], "rbf");
    assert_eq!(v["config_echo"]["kernel"]["sigma"], 1.0);
}

#[test]
fn config_echo_reproduces_result() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.json", PROB);
    let first = dir.path().join("first.json");
    let out = run(&[
        "psvdd", "--kernel", "poly", "--poly-degree", "3", "--epsilon", "0.2", "--seed", "11", "--repetitions", "2",
        "--in", input.to_str().unwrap(), "--out", first.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let again = run(&["psvdd", "--config", first.to_str().unwrap(), "--in", input.to_str().unwrap()]);
    assert!(again.status.success());
    assert_eq!(std::fs::read(&first).unwrap(), again.stdout);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "sets.json", SETS);
    let first = dir.path().join("first.json");
    assert!(run(&["setmedian", "--in", input.to_str().unwrap(), "--seed", "1", "--out", first.to_str().unwrap()])
        .status
        .success());
    let v = json(&run(&["setmedian", "--config", first.to_str().unwrap(), "--in", input.to_str().unwrap(), "--seed", "2"]));
    assert_eq!(v["config_echo"]["seed"], 2);
}

#[test]
fn malformed_json_exits_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "bad.json", "{\"d\": 2,\n  \"sets\": [[[0, 0]],\n}");
    let out = run(&["setmedian", "--in", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn invalid_instance_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_sum = write(dir.path(), "sum.json", r#"{"d": 1, "distributions": [{"entries": [{"loc": [0], "p": 0.7}]}]}"#);
    assert_eq!(run(&["pseb", "--in", bad_sum.to_str().unwrap()]).status.code(), Some(2));
    let bad_dim = write(dir.path(), "dim.json", r#"{"d": 2, "sets": [[[0, 0]], [[1]]]}"#);
    assert_eq!(run(&["setmedian", "--in", bad_dim.to_str().unwrap()]).status.code(), Some(2));
    let absent = write(dir.path(), "absent.json", r#"{"d": 1, "distributions": [{"entries": [{"loc": null, "p": 1}]}]}"#);
    assert_eq!(run(&["pseb", "--in", absent.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["setmedian", "--in", "/nonexistent/x.json"]).status.code(), Some(2));
    let sets = write(dir.path(), "sets.json", SETS);
    assert_eq!(run(&["setmedian", "--in", sets.to_str().unwrap(), "--epsilon", "2"]).status.code(), Some(2));
}

#[test]
fn exhausted_trials_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let rare = write(
        dir.path(),
        "rare.json",
        r#"{"d": 1, "distributions": [{"entries": [{"loc": [0], "p": 0.15}, {"loc": null, "p": 0.85}]}]}"#,
    );
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"epsilon": 0.1, "eta": 0.5, "seed": 0, "mode": "practical", "c_iters": 8.0, "c_select": 16.0,
            "candidate_budget": 64, "max_trials": 5}"#,
    );
    let out = run(&["pseb", "--config", cfg.to_str().unwrap(), "--in", rare.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oracle_dispatches_on_instance_kind() {
    let dir = tempfile::tempdir().unwrap();
    let sets = write(dir.path(), "sets.json", SETS);
    let v = json(&run(&["oracle", "--in", sets.to_str().unwrap()]));
    assert_eq!(v["problem"], "set_median");
    let prob = write(dir.path(), "p.json", PROB);
    let v = json(&run(&["oracle", "--in", prob.to_str().unwrap(), "--grid-step", "0.5"]));
    assert_eq!(v["problem"], "pseb");
    let cube = write(dir.path(), "cube.json", r#"{"d": 3, "distributions": [{"entries": [{"loc": [0, 0, 0], "p": 1}]}]}"#);
    assert_eq!(run(&["oracle", "--in", cube.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn bench_smoke_csv() {
    let out = run(&["bench", "--suite", "smoke", "--omit-timing"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "instance,eps,mode,cost,oracle_cost,ratio,millis");
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() >= 5);
    assert!(rows.iter().any(|r| r.contains(",paper,")));
    for r in rows {
        let fields: Vec<&str> = r.split(',').collect();
        assert_eq!(fields.len(), 7);
        let ratio: f64 = fields[5].parse().unwrap();
        assert!((0.999..1.1).contains(&ratio), "{r}");
        assert_eq!(fields[6], "");
    }
}

#[test]
fn threads_do_not_change_the_center() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "sets.json", SETS);
    let a = json(&run(&["setmedian", "--in", input.to_str().unwrap(), "--seed", "9"]));
    let b = json(&run(&["setmedian", "--in", input.to_str().unwrap(), "--seed", "9", "--threads", "4"]));
    assert_eq!(a["center"], b["center"]);
    assert_eq!(a["diagnostics"], b["diagnostics"]);
}
