mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::fixture;

fn polylap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polylap")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_accepts_bundled_fixtures() {
    for name in ["example51.json", "example52.json", "two_vertex.json", "oscillating.json"] {
        let o = polylap(&["validate", path(&fixture(name))]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        assert!(stdout(&o).ends_with(": ok\n"));
    }
}

#[test]
fn validate_reports_nonpositive_weight() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("two_vertex.json")).unwrap().replace("\"w\": 1", "\"w\": -1");
    let bad = dir.path().join("bad.json");
    fs::write(&bad, text).unwrap();
    let o = polylap(&["validate", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nonpositive weight"), "{}", stderr(&o));
}

#[test]
fn malformed_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"graph\": [,]\n}").unwrap();
    let o = polylap(&["validate", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(polylap(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(polylap(&[]).status.code(), Some(1));
}

#[test]
fn hypotheses_json_carries_constants_and_claims() {
    let o = polylap(&["hypotheses", path(&fixture("example51.json")), "--json"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let inv_q = v["constants"]["inv_k_q"].as_f64().unwrap();
    assert!((inv_q - 15.1).abs() < 0.1);
    let claims = v["claims"].as_array().unwrap();
    assert!(claims.iter().all(|c| c["agrees"] == true));
    assert_eq!(v["confirmed"], false);
}

#[test]
fn hypotheses_flags_the_disagreeing_claim() {
    let o = polylap(&["hypotheses", path(&fixture("example52.json")), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let lhs_q = v["claims"].as_array().unwrap().iter().find(|c| c["name"] == "lhs_q").unwrap();
    assert_eq!(lhs_q["agrees"], false);
    assert_eq!(lhs_q["computed"].as_f64(), Some(7.5));
}

#[test]
fn solve_writes_solution_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let o = polylap(&[
        "solve",
        path(&fixture("two_vertex.json")),
        "--mode",
        "localmin",
        "--radius",
        "10",
        "--tol",
        "1e-11",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sol: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("solution.json")).unwrap()).unwrap();
    assert_eq!(sol["accepted"], true);
    assert!((sol["level"].as_f64().unwrap() + 2.0).abs() < 1e-12);
    let hist = fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert!(hist.starts_with("iteration,phase,level,residual,step,node,winding\n"));
}

#[test]
fn solve_rejects_zero_radius() {
    let o = polylap(&["solve", path(&fixture("two_vertex.json")), "--mode", "minimax", "--radius", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_without_witness_is_not_confirmed() {
    let dir = tempfile::tempdir().unwrap();
    let o = polylap(&["solve", path(&fixture("example51.json")), "--mode", "minimax", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_sweep_prints_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = polylap(&["sweep", path(&fixture("two_vertex.json")), "--n", "0", "--m", "0", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "n\tkind\tradius\tlevel\tresidual\tstatus\n");
    let csv = fs::read_to_string(dir.path().join("levels.csv")).unwrap();
    assert_eq!(csv.trim(), "n,kind,radius,level,residual,status");
}

#[test]
fn sweep_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    let osc = fixture("oscillating.json");
    let o = polylap(&["sweep", path(&osc), "--high", "1.95,50.75", "--low", "10.5,244", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let lines = fs::read_to_string(dir.path().join("levels.csv")).unwrap();
    assert_eq!(lines.lines().count(), 5);
    let ex = fixture("example51.json");
    let o = polylap(&["sweep", path(&ex), "--high", "37.5,835", "--low", "175,4000", "--out", out]);
    assert_eq!(o.status.code(), Some(3));
    let o = polylap(&["sweep", path(&ex), "--n", "1", "--m", "1", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repeated_solves_are_byte_identical() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let o = polylap(&[
            "solve",
            path(&fixture("oscillating.json")),
            "--mode",
            "minimax",
            "--radius",
            "1.95",
            "--seed",
            "7",
            "--out",
            path(dir.path()),
        ]);
        assert_eq!(o.status.code(), Some(0));
        fs::read(dir.path().join("solution.json")).unwrap()
    };
    assert_eq!(run(), run());
}
