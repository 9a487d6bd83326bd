use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn salsa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_salsa"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_RUN: &str = r#"{
  "problem": { "kind": "logreg", "n": 300, "dim": 5, "seed": 1 },
  "optimizer": { "kind": "sgd_salsa" },
  "seeds": [4, 9],
  "epochs": 2,
  "batch_size": 20
}"#;

#[test]
fn run_with_seed_override_prints_one_trace() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.json", SMALL_RUN);
    let out = salsa(&["run", "--config", &cfg, "--seed", "9"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("k,eta,loss,grad_norm_sq,searched,backtracks,batch_seed")
    );
    // 240 training samples / 20 = 12 steps per epoch.
    assert_eq!(lines.count(), 1 + 24);
}

#[test]
fn run_writes_one_csv_per_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.json", SMALL_RUN);
    let out_path = dir.path().join("trace.csv");
    let out = salsa(&["run", "--config", &cfg, "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    for seed in [4, 9] {
        let file = dir.path().join(format!("trace_seed{seed}.csv"));
        assert!(std::fs::read_to_string(&file).unwrap().starts_with("k,eta"));
    }
    assert!(!out_path.exists());
}

#[test]
fn run_refuses_several_csv_traces_on_stdout() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.json", SMALL_RUN);
    let out = salsa(&["run", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--seed or --out"));
}

#[test]
fn run_json_holds_every_seed_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.json", SMALL_RUN);
    let a = salsa(&["run", "--config", &cfg, "--format", "json"]);
    let b = salsa(&["run", "--config", &cfg, "--format", "json"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let traces: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let seeds: Vec<u64> = traces
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["metadata"]["seed"].as_u64().unwrap())
        .collect();
    assert_eq!(seeds, [4, 9]);
}

#[test]
fn malformed_configs_fail_with_a_message() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("syntax.json", "{ not json", "syntax.json"),
        (
            "unknown_kind.json",
            r#"{"problem": {"kind": "quadratic", "dim": 2, "cond": 1.0, "seed": 0},
                "optimizer": {"kind": "rmsprop"}, "seeds": [0], "epochs": 1, "batch_size": 1}"#,
            "unknown variant",
        ),
        (
            "misplaced.json",
            r#"{"problem": {"kind": "quadratic", "dim": 2, "cond": 1.0, "seed": 0},
                "optimizer": {"kind": "adam", "lr": 0.1, "beta3": 0.9}, "seeds": [0], "epochs": 1, "batch_size": 1}"#,
            "beta3",
        ),
        (
            "no_seeds.json",
            r#"{"problem": {"kind": "quadratic", "dim": 2, "cond": 1.0, "seed": 0},
                "optimizer": {"kind": "adam_salsa"}, "seeds": [], "epochs": 1, "batch_size": 1}"#,
            "seed",
        ),
    ];
    for (name, body, needle) in cases {
        let cfg = write_config(&dir, name, body);
        let out = salsa(&["run", "--config", &cfg]);
        assert_eq!(out.status.code(), Some(1), "{name}");
        let err = stderr(&out);
        assert!(err.starts_with("error: ") && err.contains(needle), "{name}: {err}");
    }
    let missing = salsa(&["run", "--config", "/nonexistent/run.json"]);
    assert!(!missing.status.success());
    assert!(stderr(&missing).contains("/nonexistent/run.json"));
}

#[test]
fn compare_prints_a_table() {
    let cfg = configs().join("compare.json");
    let out = salsa(&["compare", "--config", cfg.to_str().unwrap(), "--seed", "0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let first: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(
        first,
        ["problem", "adam_salsa", "adam_sls", "adam(lr=0.01)", "sgd(lr=0.1)"]
    );
    let labels: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        labels,
        [
            "logreg",
            "mlp",
            "matrix_factorization",
            "arithmetic_average",
            "log_average",
            "average_rank"
        ]
    );
}

#[test]
fn scaling_and_ablation_emit_json() {
    let dir = TempDir::new().unwrap();
    let scaling = write_config(
        &dir,
        "scaling.json",
        r#"{"problem": {"kind": "logreg", "n": 400, "dim": 5, "seed": 2}, "batch_sizes": [8, 16],
            "seeds": [0, 1], "epochs": 1}"#,
    );
    let out = salsa(&["scaling", "--config", &scaling, "--format", "json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 2);
    assert_eq!(report["ratios"].as_array().unwrap().len(), 1);

    let ablation = write_config(
        &dir,
        "ablation.json",
        r#"{"problem": {"kind": "logreg", "n": 400, "dim": 5, "seed": 2}, "seeds": [0, 1],
            "epochs": 2, "batch_size": 16}"#,
    );
    let path = dir.path().join("ablation.json.out");
    let out = salsa(&[
        "freq-ablation",
        "--config",
        &ablation,
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(report["without_controller"]["searched_fraction"], 1.0);
}

#[test]
fn check_grad_reports_every_point_and_fails_on_a_tight_tolerance() {
    let dir = TempDir::new().unwrap();
    let ok = salsa(&[
        "check-grad",
        "--config",
        configs().join("check_grad.json").to_str().unwrap(),
    ]);
    assert!(ok.status.success(), "{}", stderr(&ok));
    assert_eq!(stdout(&ok).lines().count(), 1 + 10);

    let tight = write_config(
        &dir,
        "tight.json",
        r#"{"problem": {"kind": "mlp", "n": 100, "in_dim": 3, "hidden": 4, "seed": 1}, "tolerance": 1e-20}"#,
    );
    let out = salsa(&["check-grad", "--config", &tight]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("gradient check failed"));
}
