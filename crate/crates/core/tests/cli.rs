use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn scene(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes").join(name)
}

fn run(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_semiconv")).args(args).output().unwrap();
    out.status.code().unwrap()
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn saddle_theorem_q_uses_linear_channel() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.json");
    assert_eq!(run(&["check", "--scene", s(&scene("saddle.json")), "--which", "theorem-q", "--out", s(&out)]), 0);
    let r = read(&out);
    assert_eq!(r["pass"], Value::Bool(true));
    assert_eq!(r["details"]["bound"], "lint: C=1");
}

#[test]
fn strip_envelope_passes_and_small_multiple_fails() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.json");
    assert_eq!(run(&["check", "--scene", s(&scene("strip.json")), "--which", "envelope", "--out", s(&ok)]), 0);
    let bad = dir.path().join("bad.json");
    assert_eq!(run(&["check", "--scene", s(&scene("strip_small_modulus.json")), "--which", "envelope", "--out", s(&bad)]), 1);
    let r = read(&bad);
    assert_eq!(r["pass"], Value::Bool(false));
    assert!(r["min_margin"].as_f64().unwrap() < 0.0);
    assert_eq!(r["witness"]["points"].as_array().unwrap().len(), 2);
}

#[test]
fn theorem_q_on_degenerate_body_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n.json");
    assert_eq!(run(&["check", "--scene", s(&scene("strip.json")), "--which", "theorem-q", "--out", s(&out)]), 2);
    assert!(read(&out)["no_theorem_applies"].is_string());
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        assert_eq!(run(&["check", "--scene", s(&scene("saddle.json")), "--which", "semiconvex", "--out", s(p)]), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = dir.path().join("c.json");
    run(&["check", "--scene", s(&scene("saddle.json")), "--which", "semiconvex", "--seed", "7", "--out", s(&c)]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn geometry_reports_classification() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [("quadrant.json", "cone_containing", 2), ("unit_square.json", "bounded", 0), ("half_strip.json", "degenerate_unbounded", 1)];
    for (name, class, dim) in cases {
        let out = dir.path().join(name);
        assert_eq!(run(&["geometry", "--scene", s(&scene(name)), "--out", s(&out)]), 0);
        let g = read(&out);
        assert_eq!(g["classification"]["class"], class, "{name}");
        assert_eq!(g["recession_cone"]["dimension"], dim, "{name}");
    }
}

#[test]
fn witness_on_cone_containing_body_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.json");
    assert_eq!(run(&["witness", "--scene", s(&scene("quadrant.json")), "--out", s(&out)]), 2);
}

#[test]
fn half_strip_witness_and_refutation() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.json");
    assert_eq!(run(&["witness", "--scene", s(&scene("half_strip.json")), "--out", s(&w)]), 0);
    let r = dir.path().join("r.json");
    let plot = dir.path().join("r.svg");
    assert_eq!(run(&["refute", "--witness", s(&w), "--dmax", "1024", "--out", s(&r), "--plot", s(&plot)]), 0);
    let rep = read(&r);
    assert_eq!(rep["largest_defeated"], 16.0);
    assert!(rep["ceiling_reason"].is_string());
    assert!(std::fs::read_to_string(&plot).unwrap().starts_with("<svg"));
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("bogus.json");
    std::fs::write(&bogus, r#"{"body": {"type": "strip"}, "extra": 1}"#).unwrap();
    let out = dir.path().join("o.json");
    assert_eq!(run(&["geometry", "--scene", s(&bogus), "--out", s(&out)]), 2);
    assert_eq!(run(&["check", "--scene", s(&scene("missing.json")), "--which", "gap", "--out", s(&out)]), 2);
}
