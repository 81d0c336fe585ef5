mod common;

use common::*;
use serde_json::Value;
use tempfile::tempdir;

#[test]
fn analyze_toy_csv() {
    let dir = tempdir().unwrap();
    let csv = write(dir.path(), "toy.csv", TOY_CSV);
    let r = imflow(&[
        "analyze".as_ref(),
        csv.as_os_str(),
        "--x=x".as_ref(),
        "--t=t".as_ref(),
        "--y=y".as_ref(),
        "--categorical".as_ref(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let j = r.json();
    for (k, want) in [("a", 1.0), ("b", 0.0), ("c", 0.0), ("d", 1.0)] {
        let got = f(&j, &format!("body.analysis.matrix.{k}"));
        assert!((got - want).abs() <= 1e-9, "{k} = {got}");
    }
    assert_eq!(get(&j, "body.analysis.pattern.kind"), "max_discriminative");
    assert_valid(&report_schema(), &j);
}

#[test]
fn det_mode_on_noisy_data_lists_failure_and_exits_zero() {
    let dir = tempdir().unwrap();
    // x = 0 maps to both t = 0 and t = 1
    let csv = write(dir.path(), "noisy.csv", "x,t,y\n0,0,0\n0,1,0\n1,1,1\n1,1,1\n");
    let r = imflow(&[
        "analyze".as_ref(),
        csv.as_os_str(),
        "--x=x".as_ref(),
        "--t=t".as_ref(),
        "--y=y".as_ref(),
        "--categorical".as_ref(),
        "--mode=det".as_ref(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let checks = get(&r.json(), "body.analysis.constraints.checks")
        .as_array()
        .unwrap()
        .clone();
    let det = checks.iter().find(|c| c["name"] == "determinism").unwrap();
    assert_eq!(det["passed"], false);
}

#[test]
fn input_errors_exit_two() {
    let dir = tempdir().unwrap();
    let csv = write(dir.path(), "toy.csv", TOY_CSV);
    let missing_y = imflow(&[
        "analyze".as_ref(),
        csv.as_os_str(),
        "--x=x".as_ref(),
        "--t=t".as_ref(),
        "--y=label".as_ref(),
    ]);
    assert_eq!(missing_y.code, 2);
    assert!(missing_y.stderr.contains("label"), "{}", missing_y.stderr);

    let bad = write(dir.path(), "bad.csv", "x,t,y\n0,1\n");
    let r = imflow(&[
        "analyze".as_ref(),
        bad.as_os_str(),
        "--x=x".as_ref(),
        "--t=t".as_ref(),
        "--y=y".as_ref(),
    ]);
    assert_eq!(r.code, 2);

    let nofile = imflow(&["analyze", "/nonexistent/data.csv", "--x=x", "--t=t", "--y=y"]);
    assert_eq!(nofile.code, 2);

    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"joint": {"kind": "toy"}, "channel": {"kind": "teleport"}}"#,
    );
    assert_eq!(imflow(&["simulate".as_ref(), cfg.as_os_str()]).code, 2);
}

#[test]
fn simulate_max_discriminative_on_toy() {
    let dir = tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "md.json",
        r#"{"joint": {"kind": "toy"}, "channel": {"kind": "pattern", "pattern": "max_discriminative"}}"#,
    );
    let r = imflow(&["simulate".as_ref(), cfg.as_os_str()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let j = r.json();
    assert_eq!(get(&j, "body.analysis.pattern.kind"), "max_discriminative");
    assert_eq!(get(&j, "body.analysis.pattern.oracle"), true);
    assert_valid(&report_schema(), &j);
}

#[test]
fn unachievable_pattern_exits_three() {
    let dir = tempdir().unwrap();
    // H(Y|X) > 0: x = 0 carries both labels.
    let cfg = write(
        dir.path(),
        "noisy.json",
        r#"{"joint": {"kind": "explicit", "cells": [
              {"x": 0, "y": 0, "mass": 0.25}, {"x": 0, "y": 1, "mass": 0.25},
              {"x": 1, "y": 1, "mass": 0.5}]},
            "channel": {"kind": "pattern", "pattern": "max_discriminative"}}"#,
    );
    let r = imflow(&["simulate".as_ref(), cfg.as_os_str()]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert!(!r.stderr.trim().is_empty());
}

#[test]
fn zero_noise_matches_deterministic_body() {
    let dir = tempdir().unwrap();
    let det = write(
        dir.path(),
        "det.json",
        r#"{"joint": {"kind": "toy"}, "channel": {"kind": "mapping", "mapping": [0, 0, 1, 1]}}"#,
    );
    let stoch = write(
        dir.path(),
        "stoch.json",
        r#"{"joint": {"kind": "toy"}, "channel": {"kind": "mapping", "mapping": [0, 0, 1, 1]},
            "noise": {"kind": "bit_flip", "p": 0.0}}"#,
    );
    let a = imflow(&["simulate".as_ref(), det.as_os_str()]);
    let b = imflow(&["simulate".as_ref(), stoch.as_os_str()]);
    assert_eq!((a.code, b.code), (0, 0));
    let body = |r: &Run| serde_json::to_string_pretty(&r.json()["body"]).unwrap();
    assert_eq!(body(&a), body(&b));
}

#[test]
fn simulate_writes_samples_csv() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("out");
    let r = imflow(&[
        "simulate".as_ref(),
        config("toy-simulate.json").as_os_str(),
        "--samples=500".as_ref(),
        "--out".as_ref(),
        out.as_os_str(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let samples = std::fs::read_to_string(out.join("samples.csv")).unwrap();
    assert_eq!(samples.lines().next(), Some("x,t,y"));
    assert_eq!(samples.lines().count(), 501);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_valid(&report_schema(), &report);
}

fn train(dir: &std::path::Path, extra: &[&str]) -> Run {
    let csv = write(dir, "xor.csv", &xor_csv(256));
    let mut args: Vec<std::ffi::OsString> = vec!["train-chain".into(), csv.into(), "--y=y".into()];
    args.extend(extra.iter().map(Into::into));
    imflow(&args)
}

#[test]
fn train_chain_diagram_counts_rows() {
    let dir = tempdir().unwrap();
    let r = train(dir.path(), &["--epochs=20", "--snapshots=0,10,20", "--format=csv"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines[0], "snapshot_epoch,layer,a_bits,d_bits,ixx_bits,pattern");
    // 3 snapshots x (2 hidden + output + input)
    assert_eq!(lines.len() - 1, 3 * (2 + 2));
    assert!(lines[1].starts_with("0,input,"));
}

#[test]
fn train_chain_report_validates_and_writes_diagram() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("run");
    let r = train(dir.path(), &["--epochs=5", "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_valid(&report_schema(), &report);
    assert!(std::fs::read_to_string(out.join("diagram.csv"))
        .unwrap()
        .starts_with("snapshot_epoch,"));
}

#[test]
fn train_chain_converged_output_keeps_relevant_information() {
    let dir = tempdir().unwrap();
    let r = train(dir.path(), &["--epochs=1000"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let j = r.json();
    assert_eq!(f(&j, "body.training.final_accuracy"), 1.0);
    let snaps = get(&j, "body.snapshots").as_array().unwrap();
    let last = snaps.last().unwrap()["chain"]["layers"]
        .as_array()
        .unwrap()
        .last()
        .unwrap();
    let d = last["matrix"]["d"].as_f64().unwrap();
    let i_xy = last["quantities"]["i_xy"].as_f64().unwrap();
    assert!((d - i_xy).abs() <= 0.1, "d = {d}, i_xy = {i_xy}");
}

#[test]
fn train_chain_rejects_non_binary_target() {
    let dir = tempdir().unwrap();
    let csv = write(dir.path(), "multi.csv", "a,y\n0,0\n1,1\n2,2\n");
    let r = imflow(&["train-chain".as_ref(), csv.as_os_str(), "--y=y".as_ref()]);
    assert_eq!(r.code, 2, "{}", r.stderr);
}

fn sweep(extra: &[&str]) -> Value {
    let mut args: Vec<std::ffi::OsString> = vec!["objective-sweep".into(), config("toy-candidates.json").into()];
    args.extend(extra.iter().map(Into::into));
    let r = imflow(&args);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let j = r.json();
    assert_valid(&report_schema(), &j);
    j
}

fn row<'a>(j: &'a Value, label: &str) -> &'a Value {
    get(j, "body.rows")
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["label"] == label)
        .unwrap_or_else(|| panic!("no row {label}"))
}

#[test]
fn sweep_alpha_grid_is_equivalent() {
    let j = sweep(&["--alphas=0.25,0.5,0.75", "--betas=1"]);
    let eq = get(&j, "body.equivalence").as_array().unwrap();
    assert_eq!(eq.len(), 3);
    assert!(eq
        .iter()
        .all(|e| e["verdict"] == "equivalent" && e["equivalent"] == true));
}

#[test]
fn sweep_beta_half_selects_constant() {
    let j = sweep(&["--betas=0.5"]);
    assert_eq!(row(&j, "ib_reformulated(beta=0.5)")["selected"], "constant");
}

#[test]
fn sweep_alpha_one_argmin_is_an_array_of_two() {
    let j = sweep(&["--alphas=1"]);
    let set = row(&j, "parametric(alpha=1)")["argmin_set"].as_array().unwrap();
    assert_eq!(set.len(), 2);
}

#[test]
fn sweep_alpha_zero_equivalence_is_undefined() {
    let j = sweep(&["--alphas=0,0.5"]);
    let e = &get(&j, "body.equivalence")[0];
    assert_eq!(e["verdict"], "undefined");
    assert!(e["beta"].is_null() && e["equivalent"].is_null());
}

#[test]
fn sweep_rejects_alpha_outside_unit_interval() {
    let r = imflow(&[
        "objective-sweep".as_ref(),
        config("toy-candidates.json").as_os_str(),
        "--alphas=1.5".as_ref(),
    ]);
    assert_eq!(r.code, 2);
}

#[test]
fn grad_check_passes_and_validates() {
    let r = imflow(&["grad-check", "--widths=4,6,3,1", "--seed=3"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let j = r.json();
    assert_eq!(get(&j, "body.passed"), true);
    assert!(f(&j, "body.max_relative_error") < 1e-4);
    assert_valid(&report_schema(), &j);
}

#[test]
fn grad_check_failure_exits_four() {
    let r = imflow(&["grad-check", "--threshold=0"]);
    assert_eq!(r.code, 4, "{}", r.stderr);
    assert_eq!(get(&r.json(), "body.passed"), false);
}

#[test]
fn sample_configs_match_config_schemas() {
    use imflow_cli::schemas::{CANDIDATES_CONFIG, SIMULATE_CONFIG};
    for (file, schema) in [
        ("toy-simulate.json", SIMULATE_CONFIG),
        ("toy-candidates.json", CANDIDATES_CONFIG),
    ] {
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(config(file)).unwrap()).unwrap();
        assert_valid(&serde_json::from_str(schema).unwrap(), &doc);
    }
}

/// Every numeric leaf in every shipped schema must name its units.
#[test]
fn every_numeric_schema_field_has_units() {
    fn walk(v: &Value, path: &str, missing: &mut Vec<String>) {
        match v {
            Value::Object(m) => {
                let numeric = match m.get("type") {
                    Some(Value::String(t)) => t == "number" || t == "integer",
                    Some(Value::Array(ts)) => ts.iter().any(|t| t == "number" || t == "integer"),
                    _ => false,
                };
                if numeric && !m.get("units").is_some_and(Value::is_string) {
                    missing.push(path.to_string());
                }
                for (k, child) in m {
                    walk(child, &format!("{path}/{k}"), missing);
                }
            }
            Value::Array(items) => {
                for (i, child) in items.iter().enumerate() {
                    walk(child, &format!("{path}/{i}"), missing);
                }
            }
            _ => {}
        }
    }
    use imflow_cli::schemas::{CANDIDATES_CONFIG, REPORT, SIMULATE_CONFIG};
    for text in [REPORT, SIMULATE_CONFIG, CANDIDATES_CONFIG] {
        let mut missing = Vec::new();
        walk(&serde_json::from_str(text).unwrap(), "#", &mut missing);
        assert!(missing.is_empty(), "numeric fields without units: {missing:?}");
    }
}
