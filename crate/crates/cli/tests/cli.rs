use std::process::{Command, Output};

use cvpam::optimize::{max_witness, OptimizerConfig, SchemeSpec};
use cvpam::report::fmt_num;
use cvpam::witness::make_s3;

fn cvpam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvpam"))
        .args(args)
        .env_remove("CVPAM_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn optimize_matches_library_call() {
    let out = cvpam(&["optimize", "--witness", "s3", "--scheme", "DD", "--restarts", "40", "--seed", "9"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("# cvpam "));
    assert!(text.contains("# seed: 9\n"));
    assert!(text.contains("# config_hash: "));
    let cfg = OptimizerConfig::default().with_restarts(40).with_seed(9);
    let v = max_witness(&make_s3(), &SchemeSpec::parse("DD").unwrap(), &cfg).unwrap().best_value;
    let row = text.lines().last().unwrap();
    assert_eq!(row, format!("DD,s3,{},{}", fmt_num(1.0), fmt_num(v)));
    assert!((v - 3.783).abs() < 0.01);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let args = ["framefree", "--samples", "2000", "--seed", "4"];
    assert_eq!(cvpam(&args).stdout, cvpam(&args).stdout);
}

#[test]
fn seed_from_environment() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_cvpam"))
        .args(["bound", "--s", "1.7", "--w", "0.5"])
        .env("CVPAM_SEED", "123")
        .output()
        .unwrap();
    assert!(stdout(&with_env).contains("# seed: 123\n"));
}

#[test]
fn bad_scheme_is_a_usage_error() {
    let out = cvpam(&["optimize", "--witness", "s3", "--scheme", "XX"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(cvpam(&["optimize", "--bogus"]).status.code(), Some(1));
    assert_eq!(cvpam(&["bound", "--s", "3.0", "--w", "0.5"]).status.code(), Some(1));
}

#[test]
fn bound_reports_analytical_value() {
    let out = cvpam(&["bound", "--s", "1.9142135623730951", "--w", "0.5"]);
    assert!(out.status.success());
    let row = stdout(&out).lines().last().unwrap().to_string();
    let cells: Vec<&str> = row.split(',').collect();
    let h: f64 = cells[3].parse().unwrap();
    assert!((h - 0.228).abs() < 1e-3);
    assert_eq!(cells[4], "0");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = std::env::temp_dir().join(format!("cvpam-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.json");
    std::fs::write(&path, r#"{"witness": "s3", "scheme": "HH", "restarts": 20, "seed": 5}"#).unwrap();
    let p = path.to_str().unwrap();
    let from_file = stdout(&cvpam(&["--config", p, "optimize"]));
    assert!(from_file.contains("# seed: 5\n") && from_file.contains("\nHH,s3,"));
    let overridden = stdout(&cvpam(&["--config", p, "optimize", "--scheme", "DH", "--seed", "6"]));
    assert!(overridden.contains("# seed: 6\n") && overridden.contains("\nDH,s3,"));
    std::fs::write(&path, r#"{"unknown_key": 1}"#).unwrap();
    assert_eq!(cvpam(&["--config", p, "fixtures"]).status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn json_output_and_out_file() {
    let dir = std::env::temp_dir().join(format!("cvpam-cli-json-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("fixtures.json");
    let out = cvpam(&["fixtures", "--table", "4222", "--format", "json", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["data"].as_array().unwrap().len(), 3);
    assert!(doc["header"]["config_hash"].as_str().unwrap().len() == 64);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn entropy_marks_infeasible_points() {
    let out = cvpam(&["entropy", "--witness", "s3", "--grid", "3.5,4.0", "--restarts", "8"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("# skipped W*=4.00000000000"));
    assert!(text.lines().last().unwrap().starts_with("4.00000000000,"));
}

#[test]
fn displacement_sweep_keeps_violation() {
    let out = cvpam(&["framefree", "--protocol", "displacement", "--pool", "4", "--gamma-points", "37", "--restarts", "64"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("# non_violating_points: 0\n"));
    assert_eq!(text.lines().filter(|l| l.ends_with(",1")).count(), 37);
}
