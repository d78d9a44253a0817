use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sasaki(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sasaki")).args(args).output().expect("binary runs")
}

fn sasaki_with_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sasaki")).args(args).env("SASAKI_THREADS", threads).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn without_timestamp(mut v: Value) -> Value {
    v.as_object_mut().expect("report is an object").remove("timestamp");
    v
}

#[test]
fn check_identities_reports_six_residuals() {
    let out = sasaki(&["check-identities", "--model", "s3", "--points", "100"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["command"], "check-identities");
    assert_eq!(r["status"], "pass");
    let residuals = r["result"]["residuals"].as_object().unwrap();
    assert_eq!(residuals.len(), 6);
    assert!(residuals.values().all(|v| v.as_f64().unwrap() < 1e-6));
    assert!(r["result"]["closed_form_max"].as_f64().unwrap() < 1e-9);
    let ratio = &r["result"]["curvature"];
    for key in ["transverse_ricci_ratio_min", "transverse_ricci_ratio_max"] {
        assert!((ratio[key].as_f64().unwrap() - 4.0).abs() < 1e-6);
    }
}

#[test]
fn heisenberg_distance_to_a_unit_horizontal_displacement() {
    let out = sasaki(&["cc-distance", "--model", "heisenberg", "--from", "0,0,0", "--to", "1,0,0"]);
    assert_eq!(code(&out), 0);
    let d = report(&out)["result"]["distance"].as_f64().unwrap();
    assert!((d - 1.0).abs() < 1e-3, "{d}");
}

#[test]
fn negative_coordinates_are_accepted() {
    let out = sasaki(&["cc-distance", "--model", "heisenberg", "--from", "-0.5,0,0", "--to", "0.5,0,0"]);
    assert_eq!(code(&out), 0);
    let d = report(&out)["result"]["distance"].as_f64().unwrap();
    assert!((d - 1.0).abs() < 1e-3, "{d}");
}

#[test]
fn exhausted_search_budget_exits_with_three() {
    let out = sasaki(&["cc-distance", "--model", "heisenberg", "--from", "0,0,0", "--to", "1,0,0", "--t-max", "0.5"]);
    assert_eq!(code(&out), 3);
    let r = report(&out);
    assert_eq!(r["status"], "budget_exhausted");
    assert!(r["result"]["distance"].is_null());
}

#[test]
fn failed_invariant_exits_with_two() {
    // A lower Ricci bound far above the true one makes every certificate fail.
    let out = sasaki(&["myers-verify", "--model", "s3", "--pairs", "1", "--tau", "100"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&out)["status"], "fail");
}

#[test]
fn usage_errors_exit_with_one() {
    let cases: &[&[&str]] = &[
        &["check-identities", "--model", "torus"],
        &["check-identities", "--points", "many"],
        &["cc-distance", "--model", "heisenberg", "--from", "0,0", "--to", "1,0,0"],
        &["cc-distance", "--model", "s3", "--from", "2,0,0,0", "--to", "1,0,0,0"],
        &["no-such-command"],
        &["check-identities", "--format", "csv"],
        &["functionals", "--harmonic", "2"],
        &["functionals", "--harmonic", "3,-2", "--amplitude", "0.05"],
        &["dhomothety", "--mu", "-1"],
        &["--threads", "0", "check-identities"],
    ];
    for args in cases {
        let out = sasaki(args);
        assert_eq!(code(&out), 1, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty(), "{args:?} wrote a report");
    }
}

#[test]
fn help_and_version_exit_with_zero() {
    for args in [&["--help"][..], &["--version"], &["geodesic", "--help"]] {
        assert_eq!(code(&sasaki(args)), 0);
    }
    let help = String::from_utf8(sasaki(&["--help"]).stdout).unwrap();
    assert!(help.contains("t, x0.., v0.., alpha0, H"));
}

#[test]
fn unwritable_output_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing").join("report.json");
    let out = sasaki(&["check-identities", "-o", target.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(!target.exists());
}

#[test]
fn report_goes_to_the_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let out = sasaki(&["check-identities", "--points", "10", "--output", target.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(r["result"]["points"], 10);
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(|v| v.parse::<f64>().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn geodesic_csv_dump_has_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("path.csv");
    let out = sasaki(&[
        "geodesic",
        "--model",
        "s3",
        "--t-end",
        "1",
        "--step",
        "0.01",
        "--format",
        "csv",
        "-o",
        target.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&target);
    assert_eq!(header, ["t", "x0", "x1", "x2", "x3", "v0", "v1", "v2", "v3", "alpha0", "H"]);
    assert_eq!(rows.len(), 101);
    assert_eq!(rows[0][0], 0.0);
    assert!((rows[100][0] - 1.0).abs() < 1e-12);
    for row in &rows {
        let norm: f64 = row[1..5].iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-10);
        assert!((row[9] - rows[0][9]).abs() < 1e-8 && (row[10] - rows[0][10]).abs() < 1e-8);
    }
}

#[test]
fn geodesic_from_given_point_and_direction() {
    let out = sasaki(&[
        "geodesic",
        "--model",
        "heisenberg",
        "--from",
        "0,0,0",
        "--direction",
        "1,0,0",
        "--alpha0",
        "0",
        "--t-end",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let end: Vec<f64> = r["result"]["end"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((end[0] - 2.0).abs() < 1e-9 && end[1].abs() < 1e-9 && end[2].abs() < 1e-9, "{end:?}");
    assert!(r["result"]["convergence"]["order"].as_f64().is_some() || r["result"]["convergence"]["exact"] == true);
}

#[test]
fn equal_seeds_give_equal_reports() {
    let args = ["cc-distance", "--model", "s3", "--from", "1,0,0,0", "--to", "0,0.6,0.8,0", "--seed", "11"];
    let a = without_timestamp(report(&sasaki(&args)));
    let b = without_timestamp(report(&sasaki(&args)));
    assert_eq!(a, b);
    let one = without_timestamp(report(&sasaki_with_threads(&args, "1")));
    let three = without_timestamp(report(&sasaki_with_threads(&args, "3")));
    assert_eq!(a, one);
    assert_eq!(one, three);
}

#[test]
fn seed_changes_random_samples() {
    let run = |seed: &str| report(&sasaki(&["check-identities", "--points", "5", "--seed", seed]));
    let (a, b) = (run("1"), run("2"));
    assert_eq!(a["seed"], 1);
    assert_ne!(a["result"]["residuals"], b["result"]["residuals"]);
}

#[test]
fn dhomothety_reports_the_volume_ratio() {
    let out = sasaki(&["dhomothety", "--model", "s3", "--mu", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = &report(&out)["result"]["volume"];
    assert!((v["ratio"].as_f64().unwrap() - 0.25).abs() < 1e-2);
    assert_eq!(v["expected"], 0.25);
}

#[test]
fn dhomothety_below_one_skips_the_ricci_bound() {
    let out = sasaki(&["dhomothety", "--model", "s5", "--mu", "0.5"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert!(r["result"]["ricci_bound"]["skipped"].is_string());
    assert!((r["result"]["volume"]["expected"].as_f64().unwrap() - 8.0).abs() < 1e-12);
}

#[test]
fn functionals_of_a_harmonic_potential() {
    let out = sasaki(&["functionals", "--harmonic", "2,1", "--amplitude", "0.02"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = &report(&out)["result"];
    assert!(r["report"]["path_independence_residual"].as_f64().unwrap() < 1e-6);
    assert!(r["m_cocycle_residual"].as_f64().unwrap() < 1e-5);
    assert!(r["ij_derivative_residual"].as_f64().unwrap() < 1e-4);
    assert!(r["m_derivative_at_reference"].as_f64().unwrap().abs() < 1e-4);
    assert_eq!(r["report"]["trace_factor"], 0.5);
}

#[test]
fn functionals_read_grid_values_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("phi.csv");
    let (nlat, nlon) = (32usize, 64usize);
    let mut w = csv::Writer::from_path(&target).unwrap();
    w.write_record(["value"]).unwrap();
    for _ in 0..nlat * nlon {
        w.write_record(["0.25"]).unwrap();
    }
    w.flush().unwrap();
    let out =
        sasaki(&["functionals", "--values", target.to_str().unwrap(), "--nlat", "32", "--nlon", "64", "--lmax", "12"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    // A constant potential shifts L by the constant and leaves I and M at zero.
    let r = &report(&out)["result"]["report"];
    assert!((r["l"].as_f64().unwrap() - 0.25).abs() < 1e-10);
    assert!(r["i"].as_f64().unwrap().abs() < 1e-12);
    assert!(r["m"].as_f64().unwrap().abs() < 1e-10);
}

#[test]
fn functionals_reject_other_models() {
    let out = sasaki(&["functionals", "--model", "s5"]);
    assert_eq!(code(&out), 1);
}
