use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use majorana_twist::{build_floquet_step, parse_qasm, ModelParams};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_majorana-twist"))
        .args(args)
        .env_remove("MAJORANA_TWIST_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn simulate_writes_six_default_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"L": 6, "steps": 4}"#);
    let out_dir = dir.path().join("out");
    let out = run(&["simulate", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("autocorrelation.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,value,estimator,samples,seed,observable,L,J,g,Jx,translations"));
    let observables: Vec<&str> = lines.clone().filter(|l| l.starts_with("0,")).map(|l| l.split(',').nth(5).unwrap()).collect();
    assert_eq!(observables, ["X5", "Y5", "Z5", "X2", "Y2", "Z2"]);
    assert_eq!(lines.count(), 6 * 5);
}

#[test]
fn manifest_records_hashes_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"L": 7, "J": "0.6pi", "steps": 6, "estimator": {"kind": "partial", "samples": 9, "seed": 4}}"#,
    );
    let a = dir.path().join("a");
    let svg = dir.path().join("plot.svg");
    let out = run(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap(), "--plot", svg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["config"]["estimator"]["seed"], 4);
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 2);
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let b = dir.path().join("b");
    let rerun = run(&["simulate", "--config", a.join("manifest.json").to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert!(rerun.status.success(), "{}", stderr(&rerun));
    assert_eq!(fs::read(a.join("autocorrelation.csv")).unwrap(), fs::read(b.join("autocorrelation.csv")).unwrap());
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"L": 5, "steps": 2, "observable": [{"site": 4, "axis": "Y"}]}"#);
    let out_dir = dir.path().join("o");
    let out = run(&[
        "simulate", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--steps", "7", "--samples", "3", "--seed", "8",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("autocorrelation.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("7,"));
    assert_eq!(last.split(',').nth(2), Some("partial"));
    assert_eq!(last.split(',').nth(3), Some("3"));
    assert_eq!(last.split(',').nth(4), Some("8"));
}

#[test]
fn translate_defaults_to_the_moved_zero_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"L": 6, "steps": 3}"#);
    let out_dir = dir.path().join("t");
    let out = run(&["translate", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("translated.csv")).unwrap();
    let firsts: Vec<Vec<&str>> = csv.lines().skip(1).filter(|l| l.starts_with("0,")).map(|l| l.split(',').collect()).collect();
    assert_eq!(firsts.len(), 2);
    assert_eq!(firsts[0][5], "X4Y5");
    assert_eq!(firsts[1][5], "Y5");
    assert!(firsts.iter().all(|f| f[10] == "1"));
}

#[test]
fn zero_mode_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"L": 8}"#);
    let out_dir = dir.path().join("z");
    let out = run(&["zero-mode", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--zero-mode-tol", "1e-8"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("zero_mode.json")).unwrap()).unwrap();
    assert_eq!(report["tolerance"], 1e-8);
    let sectors = report["sectors"].as_array().unwrap();
    assert_eq!(sectors.len(), 2);
    for s in sectors {
        assert_eq!(s["zero_mode_count"].as_u64().unwrap() % 2, 1);
        assert_eq!(s["eigenvalues"].as_array().unwrap().len(), 15);
    }
}

#[test]
fn zero_mode_rejects_interactions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"L": 6, "Jx": 0.1}"#);
    let out = run(&["zero-mode", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("interacting"));
}

#[test]
fn export_qasm_round_trips_the_four_site_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"L": 4}"#);
    let out_dir = dir.path().join("q");
    let out = run(&["export-qasm", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(out_dir.join("floquet.qasm")).unwrap();
    assert!(text.starts_with("OPENQASM 3.0;"));
    let parsed = parse_qasm(&text).unwrap();
    assert_eq!(parsed.gates(), build_floquet_step(&ModelParams::standard(4).unwrap()).gates());
}

#[test]
fn noisy_writes_raw_and_mitigated_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"L": 5, "steps": 3, "observable": [{"site": 4, "axis": "Y"}],
            "estimator": {"kind": "partial", "samples": 2, "seed": 1},
            "noise": {"p2": 0.01, "readout": 0.02, "shots": 300, "seed": 5}}"#,
    );
    let out_dir = dir.path().join("n");
    let out = run(&["noisy", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("noisy.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.contains(",noisy-raw,")).count(), 4);
    assert_eq!(csv.lines().filter(|l| l.contains(",noisy-mitigated,")).count(), 4);
}

#[test]
fn noisy_requires_a_noise_section() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"L": 5}"#);
    let out = run(&["noisy", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("noise"));
}

#[test]
fn missing_config_exits_three_and_names_the_path() {
    let out = run(&["simulate", "--config", "/nonexistent/run.json"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("/nonexistent/run.json"));
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn invalid_config_exits_one_with_the_field() {
    let dir = tempfile::tempdir().unwrap();
    for (body, field) in [
        (r#"{"L": 2}"#, "L"),
        (r#"{"L": 4, "estimator": {"kind": "partial", "samples": 17}}"#, "estimator.samples"),
        (r#"{"L": 4, "noise": {"p2": 1.5}}"#, "noise.p2"),
        (r#"{"L": 4, "bogus": 1}"#, "bogus"),
    ] {
        let cfg = write_config(dir.path(), body);
        let out = run(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{body}");
        let err = stderr(&out);
        assert!(err.contains(field), "{body}: {err}");
        assert_eq!(err.trim_end().lines().count(), 1);
    }
}

#[test]
fn unknown_flag_exits_two() {
    let out = run(&["simulate", "--config", "x.json", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn full_trace_guard_needs_allow_large() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"L": 15, "steps": 0, "observable": [{"site": 14, "axis": "Y"}]}"#);
    let out = run(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let ok = run(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap(), "--allow-large"]);
    assert!(ok.status.success(), "{}", stderr(&ok));
}

#[test]
fn help_documents_precedence() {
    let out = run(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("precedence"));
}
