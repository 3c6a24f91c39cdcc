use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unsharp-ks"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn threshold_reproduces_critical_angle() {
    let v = json(&["threshold", "--delta", "0.1", "--family", "uniform-cap"]);
    let eps = v["result"]["epsilon"].as_f64().unwrap();
    assert!((eps - 0.459).abs() < 1e-3, "{eps}");
    assert_eq!(v["tool"], "unsharp-ks");
    assert_eq!(v["command"], "threshold");
    assert_eq!(v["config"]["delta"], 0.1);
    assert_eq!(v["config"]["theta_points"], 64);
    assert!(v["version"].is_string());
}

#[test]
fn ks_check_coordinate_triad_is_sat() {
    let v = json(&["ks-check", "--set", "coordinate-triad"]);
    assert_eq!(v["result"]["verdict"], "SAT");
    assert_eq!(v["result"]["assignment_verified"], true);
    assert_eq!(v["result"]["search"]["assignment"].as_array().unwrap().len(), 3);
}

#[test]
fn ks_check_defaults_to_peres33_unsat() {
    let v = json(&["ks-check"]);
    assert_eq!(v["result"]["verdict"], "UNSAT");
    assert_eq!(v["result"]["rays"], 33);
}

#[test]
fn theorem1_contradiction() {
    let v = json(&[
        "theorem1", "--family", "uniform-cap", "--epsilon", "0.4", "--delta", "0.1", "--set", "peres33",
    ]);
    assert_eq!(v["result"]["conclusion"], "contradiction established");
    let v = json(&["theorem1", "--epsilon", "1.0"]);
    assert_eq!(v["result"]["conclusion"], "hypotheses not met");
}

#[test]
fn deterministic_commands_are_bit_identical() {
    for args in [&["alphas"][..], &["povm", "--direction", "1,2,3"], &["simulate", "--trials", "5000", "--seed", "7"]] {
        assert_eq!(run(args).stdout, run(args).stdout);
    }
}

#[test]
fn simulate_csv_table() {
    let out = run(&["simulate", "--trials", "2000", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "outcome,count,frequency,expected,z");
    assert_eq!(lines.len(), 4);
    let total: u64 = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 2000);
}

#[test]
fn degrees_switch_converts_input() {
    let a = json(&["alphas", "--epsilon", "0.3"]);
    let b = json(&["alphas", "--epsilon", &0.3f64.to_degrees().to_string(), "--degrees"]);
    let x = a["result"]["alphas"]["alpha4"].as_f64().unwrap();
    let y = b["result"]["alphas"]["alpha4"].as_f64().unwrap();
    assert!((x - y).abs() < 1e-12);
}

#[test]
fn meyer_witness_default_battery() {
    let v = json(&["meyer-witness"]);
    assert_eq!(v["result"]["non_rational_images"], 10);
    assert!(v["result"]["conclusion"].is_string());
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["colour", "--delta", "0.5"]).status.code(), Some(2));
    assert_eq!(run(&["alphas", "--epsilon", "4"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(run(&["ks-check", "--set", "missing"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["alphas", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["threshold", "--delta", "0"]).status.code(), Some(1));
    // Order 8192 cannot be confirmed within the maximum order.
    assert_eq!(
        run(&["alphas", "--theta-points", "16384", "--tolerance", "1e-300"]).status.code(),
        Some(3)
    );
}

#[test]
fn set_file_is_loaded() {
    let dir = std::env::temp_dir().join(format!("unsharp-ks-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("pair.rays");
    std::fs::write(&path, "# two tripods\n1 0 0\n0 1 0\n0 0 1\n0 1 1\n0 1 -1\n").unwrap();
    let v = json(&["ks-check", "--set-file", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(v["result"]["triads"], 2);
    std::fs::write(&path, "1 0 0\n1 x 0\n").unwrap();
    assert_eq!(run(&["ks-check", "--set-file", path.to_str().unwrap()]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}
