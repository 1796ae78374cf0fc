use std::path::Path;
use std::process::{Command, Output};

use qmemcap::scales::{CapacityReport, RandomScaleReport};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmemcap")).args(args).output().unwrap()
}

fn write_spec(dir: &TempDir, name: &str, json: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_owned()
}

const PAIR: &str = r#"{"branches":[{"type":"amplitude_damping","gamma":0},{"type":"amplitude_damping","gamma":0.4}],"memory":{"kind":"periodic"}}"#;
const RANDOM: &str = r#"{"branches":[{"type":"amplitude_damping","gamma":0.1},{"type":"amplitude_damping","gamma":0.6}],"memory":{"kind":"random","q":[0.25,0.75]}}"#;

#[test]
fn capacity_json_report() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "pair.json", PAIR);
    let out = run(&["capacity", &spec, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: CapacityReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report.cp - 0.77182686).abs() < 1e-7);
    assert!((report.cbar - 0.77647835).abs() < 1e-7);
    assert_eq!(report.scale.len(), 2);
    assert_eq!(report.per_branch_suprema.len(), 2);
}

#[test]
fn malformed_q_exits_2() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(
        &dir,
        "bad.json",
        r#"{"branches":[{"type":"amplitude_damping","gamma":0.1}],"memory":{"kind":"random","q":[0.7]}}"#,
    );
    let out = run(&["random-scale", &spec]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn scale_out_of_range_exits_2() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "pair.json", PAIR);
    assert_eq!(run(&["scale", &spec, "--r", "3"]).status.code(), Some(2));
    let ok = run(&["scale", &spec, "--r", "2"]);
    assert_eq!(ok.status.code(), Some(0));
    let text = String::from_utf8(ok.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "2");
    assert!((row[1].parse::<f64>().unwrap() - 0.77182686).abs() < 1e-7);
    assert_eq!(row[2..], ["0;1", "0"]);
}

#[test]
fn memory_mismatch_exits_2() {
    let dir = TempDir::new().unwrap();
    let random = write_spec(&dir, "random.json", RANDOM);
    let periodic = write_spec(&dir, "pair.json", PAIR);
    assert_eq!(run(&["scale", &random, "--r", "1"]).status.code(), Some(2));
    assert_eq!(run(&["capacity", &random]).status.code(), Some(2));
    assert_eq!(run(&["random-scale", &periodic]).status.code(), Some(2));
}

#[test]
fn random_scale_outputs() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "random.json", RANDOM);
    let out = run(&["random-scale", &spec, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: RandomScaleReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.per_subset.len(), 3);
    let both = report.get(&[0, 1]).unwrap();
    assert!((both.q_delta - 1.0).abs() < 1e-12);
    assert!(both.c_delta <= both.cbar_delta);
    let one = run(&["random-scale", &spec, "--delta", "1"]);
    let text = String::from_utf8(one.stdout).unwrap();
    assert!(text.starts_with("delta,q_delta,c_delta_bits,cbar_delta_bits\n1,0.75,"));
}

#[test]
fn output_file_and_determinism() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "pair.json", PAIR);
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        let status = run(&[
            "staircase", &spec, "--rate", "0.1,0.774,0.9", "--trials", "20000", "--seed", "9",
            "--output", out.to_str().unwrap(),
        ]);
        assert_eq!(status.status.code(), Some(0));
    }
    let a = std::fs::read(&out_a).unwrap();
    assert_eq!(a, std::fs::read(&out_b).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(!text.contains('\r'));
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("0.1,0;1,1,0,0,20000,9"));
    assert!(rows[2].contains(",1,1,20000,9"));
}

#[test]
fn simulate_and_amax() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, "pair.json", PAIR);
    let out = run(&["simulate", &spec, "--rate", "0.5", "--subset", "1", "--trials", "10000", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["average_error"], 0.5);
    let e = v["empirical_error"].as_f64().unwrap();
    assert!((e - 0.5).abs() < 0.03);

    let out = run(&["amax", &spec]);
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((row[2] - 0.5).abs() < 1e-7);
    assert!((row[3] - 1.0).abs() < 1e-12);
    assert!(text.contains("\n1,0.4,"));

    let out = run(&["chi", &spec, "--grid", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.contains("\n0,0,0.5,1\n"));
}

#[test]
fn comparison_table_needs_no_spec() {
    let out = run(&["appendix-a", "--step", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert_eq!(run(&["appendix-a", "--step", "0.3"]).status.code(), Some(2));
}

#[test]
fn generic_branches_use_sphere_grid() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(
        &dir,
        "dep.json",
        r#"{"branches":[{"type":"depolarizing","p":0.1},{"type":"depolarizing","p":0.3}],"memory":{"kind":"periodic"}}"#,
    );
    let out = run(&["capacity", &spec, "--grid", "8", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: CapacityReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report.cp - report.cbar).abs() < 1e-6);
    assert!(report.per_branch_suprema.iter().all(|s| s.a_max.is_none()));
}

#[test]
fn unreadable_spec_exits_2() {
    assert_eq!(run(&["capacity", "/nonexistent/spec.json"]).status.code(), Some(2));
    assert!(!Path::new("/nonexistent").exists());
}
