use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tspd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tspd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = tspd(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_of(args: &[&str]) -> Value {
    let out = tspd(args);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is a JSON error object");
    err["error"].clone()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_then_solve_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    json_ok(&["gen", "--n", "7", "--seed", "11", "--out", path(&inst)]);
    let exact = json_ok(&["solve", "--instance", path(&inst), "--alpha", "2", "--method", "exact"]);
    assert_eq!(exact["method"], "exact");
    let out = dir.path().join("sol.json");
    let out_args = [
        "solve",
        "--instance",
        path(&inst),
        "--alpha",
        "2",
        "--method",
        "heuristic",
        "--seed",
        "3",
        "--out",
        path(&out),
    ];
    assert!(tspd(&out_args).status.success());
    let heur: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(heur["seed"], 3);
    let (e, h) = (exact["makespan"].as_f64().unwrap(), heur["makespan"].as_f64().unwrap());
    assert!(e <= h + 1e-9);
    let mixed = json_ok(&[
        "solve",
        "--instance",
        path(&inst),
        "--alpha",
        "2",
        "--metric",
        "mixed",
        "--method",
        "exact",
    ]);
    assert!(mixed["makespan"].as_f64().unwrap() >= e - 1e-9);
}

#[test]
fn upper_bound_fixed_and_optimised() {
    let fixed = json_ok(&[
        "upper-bound",
        "--pattern",
        "triangle",
        "--alpha",
        "2",
        "--samples",
        "20000",
        "--h",
        "1.5",
    ]);
    for key in ["pattern", "alpha", "h", "mean", "stderr", "samples", "seed"] {
        assert!(fixed.get(key).is_some(), "{key}");
    }
    assert_eq!(fixed["h"], 1.5);
    let opt = json_ok(&[
        "upper-bound",
        "--pattern",
        "straight",
        "--alpha",
        "1",
        "--samples",
        "20000",
        "--optimize-h",
    ]);
    assert!((opt["mean"].as_f64().unwrap() - 0.9212).abs() < 0.03);
    let csv = tspd(&[
        "upper-bound",
        "--pattern",
        "straight",
        "--alpha",
        "1",
        "--samples",
        "5000",
        "--h",
        "1.7",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("pattern,alpha,h,mean,stderr,samples,seed\nstraight,1.0,1.7,"));
}

#[test]
fn lower_bound_and_presets() {
    let v = json_ok(&["lower-bound", "--preset", "gaudio", "--alpha", "2"]);
    assert!((v["bound"].as_f64().unwrap() - 0.44337).abs() < 1e-4);
    let r = json_ok(&["lower-bound", "--beta", "0.6277", "--alpha", "2", "--ratio"]);
    assert!((r["bound"].as_f64().unwrap() - 0.6277 / 3.0).abs() < 1e-12);
    assert!(r["rho_star"].is_null());
    assert_eq!(
        error_of(&["lower-bound", "--preset", "nope", "--alpha", "2"])["kind"],
        "parameter"
    );
}

#[test]
fn nn_check_reports_both_orders() {
    let v = json_ok(&[
        "nn-check",
        "--norm",
        "l2",
        "--intensity",
        "4",
        "--trials",
        "2000",
        "--seed",
        "1",
    ]);
    assert_eq!(v["nearest_analytic"], 0.25);
    assert!((v["nearest_empirical"].as_f64().unwrap() - 0.25).abs() < 5.0 * v["nearest_stderr"].as_f64().unwrap());
    assert!(v["second_empirical"].as_f64().unwrap() > v["nearest_empirical"].as_f64().unwrap());
}

#[test]
fn experiment_tables_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lower.csv");
    let args = [
        "experiment",
        "lower-table",
        "--alphas",
        "1,1.5,2,2.5,3",
        "--betas",
        "0.71",
        "--format",
        "csv",
        "--out",
        path(&out),
    ];
    assert!(tspd(&args).status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    let bounds: Vec<&str> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(bounds, ["0.5670", "0.5217", "0.4858", "0.4564", "0.4317"]);

    let emp_args = [
        "experiment",
        "empirical-table",
        "--alphas",
        "2",
        "--sizes",
        "20",
        "--instances",
        "3",
        "--seed",
        "5",
    ];
    let a = json_ok(&emp_args);
    let b = json_ok(&emp_args);
    assert_eq!(a["payload"], b["payload"]);
    assert_eq!(a["metadata"]["config"]["seed"], 5);
    assert_eq!(a["metadata"]["tool"], "tspd");
    assert!(a["metadata"]["generator"].as_str().unwrap().contains("ChaCha8"));

    let up = json_ok(&[
        "experiment",
        "upper-table",
        "--alphas",
        "2",
        "--patterns",
        "quartet",
        "--samples",
        "20000",
    ]);
    assert_eq!(up["payload"][0]["pattern"], "quartet");
}

#[test]
fn errors_are_json_objects() {
    let rect = ["experiment", "upper-table", "--metric", "mixed", "--samples", "1000"];
    assert_eq!(error_of(&rect)["kind"], "unsupported");
    assert_eq!(
        error_of(&["solve", "--instance", "/no/such/file.json", "--alpha", "2"])["kind"],
        "io"
    );
    assert_eq!(error_of(&["frobnicate"])["kind"], "usage");
    assert_eq!(
        error_of(&["lower-bound", "--beta", "0.7", "--alpha", "0.5"])["kind"],
        "parameter"
    );
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("big.json");
    json_ok(&["gen", "--n", "9", "--seed", "1", "--out", path(&inst)]);
    assert_eq!(
        error_of(&["solve", "--instance", path(&inst), "--alpha", "2", "--method", "exact"])["kind"],
        "size"
    );
}
