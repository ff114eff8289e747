use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn latsearch(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latsearch")).current_dir(cwd).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

#[test]
fn simulate_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&latsearch(dir.path(), &["simulate", "--d", "2", "--n", "31", "--steps", "80", "--out", "t.csv"]));
    assert_eq!(v["rows"], 81);
    assert_eq!(v["t_peak"], 58);
    assert_eq!(v["v"], serde_json::json!([15, 15]));
    let (header, rows) = csv_rows(&dir.path().join("t.csv"));
    assert_eq!(header, "t,p_target,p_sv");
    assert_eq!(rows.len(), 81);
    for (t, row) in rows.iter().enumerate() {
        assert_eq!(row[0], t.to_string());
        let p: f64 = row[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn scan_row_count_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&latsearch(dir.path(), &["scan", "--d", "2", "--n", "5", "--points", "11", "--out", "s.csv"]));
    assert!(v.is_object());
    let (header, rows) = csv_rows(&dir.path().join("s.csv"));
    assert_eq!(header, "lambda,branch_index,eigenphase");
    assert_eq!(rows.len(), 11 * 49);
    let lambdas: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(lambdas.windows(2).all(|w| w[0] <= w[1]));
    assert!((lambdas[0] - 0.8).abs() < 1e-15 && (lambdas[lambdas.len() - 1] - 1.2).abs() < 1e-15);
}

#[test]
fn snapshots_are_normalized_and_peak_on_target() {
    let dir = tempfile::tempdir().unwrap();
    let v =
        json(&latsearch(dir.path(), &["snapshot", "--d", "2", "--n", "31", "--times", "0,57", "--out-dir", "snaps"]));
    let files = v["files"].as_array().unwrap();
    assert_eq!(files.len(), 2);
    assert_eq!(files[1]["max_vertex"], serde_json::json!([15, 15]));
    for t in [0, 57] {
        let (header, rows) = csv_rows(&dir.path().join(format!("snaps/snapshot_t{t}.csv")));
        assert_eq!(header, "x1,x2,probability");
        assert_eq!(rows.len(), 961);
        let total: f64 = rows.iter().map(|r| r[2].parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12, "t={t}: {total}");
    }
}

#[test]
fn exact_norm_converges() {
    let dir = tempfile::tempdir().unwrap();
    let a = json(&latsearch(dir.path(), &["norm", "--d", "3", "--n", "50"]))["inv_b2"].as_f64().unwrap();
    let b = json(&latsearch(dir.path(), &["norm", "--d", "3", "--n", "100"]))["inv_b2"].as_f64().unwrap();
    assert!((b - a).abs() / b < 0.02);
}

#[test]
fn predict_reports_both_routes() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&latsearch(dir.path(), &["predict", "--d", "3", "--n", "21", "--method", "asymptotic"]));
    assert_eq!(v["method"], "asymptotic");
    assert_eq!(v["T"], 132);
    assert!(v["b2_exact"].as_f64().unwrap() > v["b2"].as_f64().unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| latsearch(dir.path(), args).status.code();
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["predict", "--d", "0", "--n", "5"]), Some(2));
    assert_eq!(code(&["scan", "--d", "2", "--n", "4"]), Some(2));
    assert_eq!(code(&["norm", "--d", "2", "--method", "asymptotic"]), Some(2));
    assert_eq!(code(&["simulate", "--d", "2", "--n", "5", "--steps", "2", "--require-peak"]), Some(3));
    assert_eq!(code(&["simulate", "--d", "2", "--n", "15", "--steps", "40", "--require-peak"]), Some(0));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["scan", "--d", "3", "--n", "3", "--points", "9", "--solver", "dense"];
    let a = latsearch(dir.path(), &args);
    let b = latsearch(dir.path(), &args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
