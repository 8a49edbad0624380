use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pqcap(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqcap"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("PQCAP_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const HOPELESS: &str = r#"{
  "name": "hopeless", "base_mva": 1.0,
  "buses": [
    {"id": 1, "kind": "slack"},
    {"id": 2, "kind": "load", "v_min": 0.95, "v_max": 1.05, "pd_mw": 5.0}
  ],
  "branches": [{"from": 1, "to": 2, "r": 0.05, "x": 0.1, "rate_mva": 0.5}],
  "generators": [{"bus": 2, "p_min_mw": 0.0, "p_max_mw": 0.2, "q_min_mvar": -0.1, "q_max_mvar": 0.1}]
}"#;

#[test]
fn compute_writes_a_polygon() {
    let dir = tempfile::tempdir().unwrap();
    let out = pqcap(dir.path(), &["compute", "bundled:two_bus", "--csv", "--svg"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(&dir.path().join("two_bus.capability.json"));
    assert!(json["capability"]["polygon"]["vertices"].as_array().unwrap().len() >= 3);
    assert_eq!(json["capability"]["empty"], false);
    let csv = std::fs::read_to_string(dir.path().join("two_bus.polygon.csv")).unwrap();
    assert!(csv.starts_with("p_pu,q_pu\n"));
    let svg = std::fs::read_to_string(dir.path().join("two_bus.capability.svg")).unwrap();
    for label in ["generator", "voltage", "branch", "capability"] {
        assert!(svg.contains(label), "legend lacks {label}");
    }
}

#[test]
fn more_sides_double_the_branch_rows() {
    let dir = tempfile::tempdir().unwrap();
    let rows = |n: &str| {
        let sub = dir.path().join(n);
        let out = pqcap(&sub, &["compute", "bundled:lv_feeder", "--n-sides", n]);
        assert!(out.status.success());
        read_json(&sub.join("lv_feeder.capability.json"))["capability"]["families"]["branch"]["items"]
            .as_array()
            .unwrap()
            .len()
    };
    assert_eq!(rows("16"), 2 * rows("8"));
}

#[test]
fn infeasible_case_is_a_successful_empty_result() {
    let dir = tempfile::tempdir().unwrap();
    let case = dir.path().join("hopeless.json");
    std::fs::write(&case, HOPELESS).unwrap();
    let out = pqcap(dir.path(), &["compute", case.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let json = read_json(&dir.path().join("hopeless.capability.json"));
    assert_eq!(json["capability"]["empty"], true);
    assert!(json["capability"]["diagnostics"][0].as_str().unwrap().contains("empty"));

    // The scan cannot find any feasible point: numerical failure.
    let out = pqcap(dir.path(), &["validate", case.to_str().unwrap(), "--n-p-samples", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"name\": \"x\",\n  oops\n}").unwrap();
    let out = pqcap(dir.path(), &["compute", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = pqcap(dir.path(), &["compute", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));

    let out = pqcap(dir.path(), &["compute", "bundled:two_bus", "--n-sides", "7"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn validate_reports_metrics_and_timings() {
    let dir = tempfile::tempdir().unwrap();
    let out = pqcap(dir.path(), &["validate", "bundled:lv_feeder", "--svg", "--csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("lv_feeder.report.json"));
    for key in ["error", "fill_factor"] {
        let v = report[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v), "{key} = {v}");
    }
    assert!(report["error"].as_f64().unwrap() <= 0.05);
    let timings = read_json(&dir.path().join(report["timings_file"].as_str().unwrap()));
    assert!(timings["t_scan_s"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(dir.path().join("lv_feeder.scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 101);
    assert!(dir.path().join("lv_feeder.validate.svg").exists());
}

#[test]
fn bench_needs_two_cases() {
    let dir = tempfile::tempdir().unwrap();
    let out = pqcap(dir.path(), &["bench", "bundled:two_bus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("need ≥2 cases for regression"));

    let out = pqcap(
        dir.path(),
        &["bench", "bundled:two_bus", "synthetic:12", "nowhere.json", "--n-p-samples", "10", "--svg"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("bundled:two_bus,2,"));
    assert!(lines[2].starts_with("synthetic:12,12,"));
    assert!(lines[3].starts_with("nowhere.json,,,,\"failed"));
    assert!(dir.path().join("bench.svg").exists());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_pqcap"))
        .args(["compute", "bundled:two_bus"])
        .env("PQCAP_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("two_bus.capability.json").exists());
}

#[test]
fn matpower_input() {
    let dir = tempfile::tempdir().unwrap();
    let case = dir.path().join("tiny.m");
    std::fs::write(
        &case,
        "function mpc = tiny\nmpc.baseMVA = 10;\n\
         mpc.bus = [\n 1 3 0 0 0 0 1 1 0 20 1 1.1 0.9;\n 2 1 1 0.3 0 0 1 1 0 20 1 1.1 0.9;\n];\n\
         mpc.gen = [\n 2 0 0 2 -2 1 10 1 4 0;\n];\n\
         mpc.branch = [\n 1 2 0.01 0.05 0 8 8 8 0 0 1 -360 360;\n];\n",
    )
    .unwrap();
    let out = pqcap(dir.path(), &["compute", case.to_str().unwrap(), "--format", "matpower"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(&dir.path().join("tiny.capability.json"));
    assert_eq!(json["n_buses"], 2);
}
