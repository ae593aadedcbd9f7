use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stablegap")).args(args).output().expect("binary runs")
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (Output, String) {
    let path = dir.join(name);
    let mut all: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    all.extend(["--output", &p]);
    let out = run(&all);
    let text = fs::read_to_string(&path).unwrap_or_default();
    (out, text)
}

fn summary(csv_text: &str) -> Value {
    let line = csv_text.lines().find_map(|l| l.strip_prefix("# summary: ")).expect("summary line");
    serde_json::from_str(line).unwrap()
}

fn data_lines(csv_text: &str) -> Vec<&str> {
    csv_text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn gap_sweep_slope_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let (out, text) = run_to(dir.path(), "sweep.csv", &["gap-sweep", "--rate", "power", "--alpha", "1.0", "--n", "4..64"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "n,states,gap,gap_times_scale,method,residual");
    assert_eq!(lines.len(), 62);
    assert!(text.contains("# config_hash: ") && text.contains("# seed: "));
    let slope = summary(&text)["slope"].as_f64().unwrap();
    assert!((slope + 1.0).abs() < 0.10, "{slope}");
    assert!(dir.path().join("sweep.csv.timing.json").exists());
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["return-prob", "--rate", "q0", "--alpha", "0.8", "--times", "0,1,2.5", "--samples", "3000", "--seed", "9"];
    let (_, a) = run_to(dir.path(), "a.csv", &args);
    let (_, b) = run_to(dir.path(), "b.csv", &args);
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let (_, c) = run_to(dir.path(), "c.csv", &["return-prob", "--rate", "q0", "--alpha", "0.8", "--times", "0,1,2.5", "--samples", "3000", "--seed", "10"]);
    let hash = |s: &str| s.lines().find(|l| l.starts_with("# config_hash")).unwrap().to_string();
    assert_ne!(hash(&a), hash(&c));
    let lines = data_lines(&a);
    assert_eq!(lines[0], "t,exact_value,mc_value,mc_stderr,leaked_mass");
    // t = 0: every trajectory is still at the origin.
    assert!(lines[1].starts_with("0.0,1.0,1.0,0.0,"), "{}", lines[1]);
}

#[test]
fn json_mirrors_csv_fields() {
    let dir = tempfile::tempdir().unwrap();
    let (_, csv_text) = run_to(dir.path(), "e.csv", &["exclusion", "--n", "1..2", "--alpha", "1.0"]);
    let (out, json_text) = run_to(dir.path(), "e.json", &["exclusion", "--n", "1..2", "--alpha", "1.0", "--format", "json"]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&json_text).unwrap();
    let header: Vec<&str> = data_lines(&csv_text)[0].split(',').collect();
    assert_eq!(header, ["n", "ell", "states", "gap", "normalized_gap", "method", "residual"]);
    let row = doc["rows"][0].as_object().unwrap();
    let mut keys: Vec<&str> = row.keys().map(|s| s.as_str()).collect();
    let mut want = header.clone();
    keys.sort();
    want.sort();
    assert_eq!(keys, want);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2 + 4);
    assert!(doc["manifest"]["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn zero_range_linear_matches_walk() {
    let dir = tempfile::tempdir().unwrap();
    let (out, zr) = run_to(dir.path(), "z.json", &["zero-range", "--n", "2", "--ell", "1..3", "--g", "linear", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, sw) = run_to(dir.path(), "s.json", &["gap-sweep", "--n", "2", "--format", "json"]);
    let walk = serde_json::from_str::<Value>(&sw).unwrap()["rows"][0]["gap"].as_f64().unwrap();
    for row in serde_json::from_str::<Value>(&zr).unwrap()["rows"].as_array().unwrap() {
        assert!((row["gap"].as_f64().unwrap() - walk).abs() < 1e-8);
    }
}

#[test]
fn multiscale_certificate_json() {
    let out = run(&["multiscale", "--K", "2", "--alpha", "1.0", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let cert = &doc["rows"][0];
    assert!(cert["params"]["theta"].as_f64().unwrap() < 1.0);
    assert!(cert["kappa"].as_f64().unwrap().is_finite());
}

#[test]
fn compare_emits_certificate_and_ratios() {
    let out = run(&["compare", "--rate", "lacunary", "--alpha", "1.0", "--n-max", "2000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(data_lines(&text)[0], "index,K,sup_ratio,argmax_n");
    let s = summary(&text);
    assert_eq!(s["within_kappa"], Value::Bool(true));
    assert!(s["certificate"]["kappa"].as_f64().unwrap() >= s["sup_ratio"].as_f64().unwrap());
}

#[test]
fn validation_errors_exit_2() {
    for args in [
        vec!["gap-sweep", "--n", "5..4"],
        vec!["gap-sweep", "--alpha", "2.5"],
        vec!["gap-sweep", "--n", "0..3"],
        vec!["exclusion", "--n", "1", "--ell", "5"],
        vec!["return-prob", "--rate", "nn", "--alias-horizon", "10", "--times", "1"],
        vec!["return-prob", "--samples", "0"],
        vec!["multiscale", "--rate", "nn"],
        vec!["verify-all", "--only", "9"],
        vec!["gap-sweep", "--bogus"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn leaking_box_exits_3() {
    let out = run(&["return-prob", "--rate", "lacunary", "--times", "20", "--box-radius", "64", "--samples", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("leaks"));
}

#[test]
fn verify_all_reports_and_catches_injected_asymmetry() {
    let ok = run(&["verify-all", "--only", "5,8"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let stderr = String::from_utf8_lossy(&ok.stderr);
    assert!(stderr.contains("[PASS] 5") && stderr.contains("[PASS] 8"));
    let bad = run(&["verify-all", "--only", "8", "--inject-asymmetry"]);
    assert_eq!(bad.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("[FAIL] 8"));
}
