use std::path::PathBuf;
use std::process::{Command, Output};

use locc_forge::cli::save_state;
use locc_forge::BipartiteState;
use serde_json::Value;
use tempfile::TempDir;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Workspace {
            dir: tempfile::tempdir().unwrap(),
        };
        ws.state("bell.json", &[0.5, 0.5]);
        ws.state("partial.json", &[0.8, 0.2]);
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn state(&self, name: &str, sq: &[f64]) -> PathBuf {
        let path = self.path(name);
        save_state(&path, &BipartiteState::from_schmidt(sq, 2, 2).unwrap()).unwrap();
        path
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let path = self.path(name);
        std::fs::write(&path, text).unwrap();
        path
    }

    fn run(&self, args: &[&str]) -> (i32, Value, String) {
        self.run_with(args, None)
    }

    fn run_with(&self, args: &[&str], tol_env: Option<&str>) -> (i32, Value, String) {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_locc-forge"));
        cmd.current_dir(self.dir.path()).args(args).env_remove("LOCC_FORGE_TOL");
        if let Some(t) = tol_env {
            cmd.env("LOCC_FORGE_TOL", t);
        }
        let Output { status, stdout, stderr } = cmd.output().unwrap();
        let json = serde_json::from_slice(&stdout).unwrap_or(Value::Null);
        (
            status.code().unwrap(),
            json,
            String::from_utf8_lossy(&stderr).into_owned(),
        )
    }
}

#[test]
fn feasibility_exit_codes() {
    let ws = Workspace::new();
    let (code, json, err) = ws.run(&["feasibility", "bell.json", "partial.json", "--p", "max"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(json["p_max"].as_f64(), Some(1.0));
    assert_eq!(json["deterministic_ok"], Value::Bool(true));
    assert!(err.contains("feasible"));

    let (code, json, _) = ws.run(&["feasibility", "partial.json", "bell.json", "--p", "0.5"]);
    assert_eq!(code, 1);
    assert!((json["p_max"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    assert_eq!(json["feasible"], Value::Bool(false));
}

#[test]
fn malformed_input_exits_2() {
    let ws = Workspace::new();
    ws.write("trunc.json", r#"{"dims": [2, 2], "matrix": [[[0.7"#);
    let (code, json, err) = ws.run(&["feasibility", "trunc.json", "bell.json"]);
    assert_eq!(code, 2);
    assert_eq!(json["error"]["kind"], "invalid-input");
    assert!(err.starts_with("error:"));

    let (code, json, _) = ws.run(&["feasibility", "missing.json", "bell.json"]);
    assert_eq!(code, 2);
    assert_eq!(json["error"]["kind"], "invalid-input");

    let (code, _, _) = ws.run(&["feasibility", "bell.json", "partial.json", "--p", "1.5"]);
    assert_eq!(code, 2);

    let (code, _, _) = ws.run(&["no-such-command"]);
    assert_eq!(code, 2);
}

#[test]
fn unnormalized_state_needs_flag() {
    let ws = Workspace::new();
    ws.write("big.json", r#"{"dims":[2,2],"matrix":[[[1,0],[0,0]],[[0,0],[1,0]]]}"#);
    let (code, _, _) = ws.run(&["feasibility", "big.json", "partial.json"]);
    assert_eq!(code, 2);
    let (code, json, _) = ws.run(&["--renormalize", "feasibility", "big.json", "partial.json"]);
    assert_eq!(code, 0);
    assert_eq!(json["p_max"].as_f64(), Some(1.0));
}

#[test]
fn synthesize_infeasible_reports_p_max() {
    let ws = Workspace::new();
    let (code, json, _) = ws.run(&["synthesize", "partial.json", "bell.json", "--p", "0.5"]);
    assert_eq!(code, 1);
    assert_eq!(json["error"]["kind"], "infeasible");
    assert!((json["error"]["p_max"].as_f64().unwrap() - 0.4).abs() < 1e-12);
}

#[test]
fn mismatched_dimensions_exit_2() {
    let ws = Workspace::new();
    save_state(
        &ws.path("big.json"),
        &BipartiteState::from_schmidt(&[0.5, 0.5], 3, 3).unwrap(),
    )
    .unwrap();
    let (code, json, _) = ws.run(&["synthesize", "partial.json", "big.json"]);
    assert_eq!(code, 2);
    assert_eq!(json["error"]["kind"], "dimension-mismatch");
}

#[test]
fn synthesize_verify_pipeline() {
    let ws = Workspace::new();
    let (code, json, _) = ws.run(&["synthesize", "bell.json", "partial.json"]);
    assert_eq!(code, 0);
    assert!(json["stage2"].is_null());
    assert_eq!(json["meta"]["dims"], serde_json::json!([2, 2]));
    assert_eq!(json["meta"]["p_total"].as_f64(), Some(1.0));

    let (code, _, err) = ws.run(&["synthesize", "bell.json", "partial.json", "-o", "proto.json"]);
    assert_eq!(code, 0);
    assert!(ws.path("proto.json").exists(), "{err}");
    let (code, report, _) = ws.run(&["verify", "proto.json", "bell.json", "partial.json"]);
    assert_eq!(code, 0);
    assert_eq!(report["passed"], Value::Bool(true));
    assert!(report["completeness_residual"].as_f64().unwrap() <= 1e-9);

    // verifying against the wrong target fails rather than erroring
    let (code, report, _) = ws.run(&["verify", "proto.json", "bell.json", "bell.json"]);
    assert_eq!(code, 1);
    assert_eq!(report["passed"], Value::Bool(false));
}

#[test]
fn tolerance_flag_and_environment() {
    let ws = Workspace::new();
    ws.run(&[
        "synthesize",
        "partial.json",
        "bell.json",
        "--p",
        "0.4",
        "-o",
        "proto.json",
    ]);
    let args = ["verify", "proto.json", "partial.json", "bell.json"];
    assert_eq!(ws.run(&args).0, 0);
    assert_eq!(ws.run_with(&args, Some("1e-30")).0, 1);
    // an explicit flag wins over the environment
    let with_flag = ["verify", "--tol", "1e-9", "proto.json", "partial.json", "bell.json"];
    assert_eq!(ws.run_with(&with_flag, Some("1e-30")).0, 0);
    assert_eq!(
        ws.run(&["verify", "--tol", "-1", "proto.json", "partial.json", "bell.json"])
            .0,
        2
    );
}

#[test]
fn simulate_reports_estimate() {
    let ws = Workspace::new();
    ws.run(&[
        "synthesize",
        "partial.json",
        "bell.json",
        "--p",
        "0.4",
        "-o",
        "proto.json",
    ]);
    let args = [
        "simulate",
        "proto.json",
        "partial.json",
        "bell.json",
        "--trials",
        "10000",
        "--seed",
        "42",
    ];
    let (code, json, _) = ws.run(&args);
    assert_eq!(code, 0);
    let p_hat = json["p_hat"].as_f64().unwrap();
    assert!((p_hat - 0.4).abs() <= 4.0 * (0.4f64 * 0.6 / 10_000.0).sqrt(), "{p_hat}");
    assert_eq!(json["within_4_sigma"], Value::Bool(true));
    assert!(json["mean_success_fidelity"].as_f64().unwrap() >= 1.0 - 1e-9);
    assert_eq!(ws.run(&args).1, json);

    let (code, _, _) = ws.run(&["simulate", "proto.json", "partial.json", "bell.json", "--trials", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn reduce_bob_identity() {
    let ws = Workspace::new();
    ws.write("id.json", r#"{"dims":[2,2],"matrix":[[[1,0],[0,0]],[[0,0],[1,0]]]}"#);
    let (code, json, _) = ws.run(&["reduce-bob", "id.json", "partial.json"]);
    assert_eq!(code, 0);
    assert!(json["residual"].as_f64().unwrap() <= 1e-12);
    assert_eq!(json["N"].as_array().unwrap().len(), 2);

    ws.write("big.json", r#"{"dims":[2,2],"matrix":[[[2,0],[0,0]],[[0,0],[1,0]]]}"#);
    assert_eq!(ws.run(&["reduce-bob", "big.json", "partial.json"]).0, 2);
}
