//! End-to-end CLI checks: subcommand wiring and exit codes.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fedcausal"))
}

fn synth(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let data = dir.join("data.csv");
    let dag = dir.join("truth.graph");
    let status = bin()
        .args([
            "synth",
            "--nodes",
            "8",
            "--samples",
            "1500",
            "--seed",
            "11",
            "--data-out",
            data.to_str().unwrap(),
            "--dag-out",
            dag.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    (data, dag)
}

#[test]
fn synth_learn_score_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (data, dag) = synth(dir.path());
    let learned = dir.path().join("learned.graph");

    let status = bin()
        .args([
            "learn",
            "--data",
            data.to_str().unwrap(),
            "--algorithm",
            "fedpc",
            "--clients",
            "4",
            "--mode",
            "exact-agg",
            "--out",
            learned.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&learned).unwrap();
    assert!(text.starts_with("nodes: X0,"));
    assert!(text.contains("kind: cpdag"));

    let output = bin()
        .args([
            "score",
            "--learned",
            learned.to_str().unwrap(),
            "--truth",
            dag.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert!(report.get("shd").is_some());
}

#[test]
fn ci_test_emits_decision_json() {
    let dir = tempfile::tempdir().unwrap();
    let (data, _) = synth(dir.path());
    let output = bin()
        .args([
            "ci-test",
            "--data",
            data.to_str().unwrap(),
            "--x",
            "X0",
            "--y",
            "X1",
            "--cond",
            "X2",
            "--clients",
            "3",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let decision: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert!(decision.get("statistic").is_some());
    assert!(decision.get("dof").is_some());
    assert!(decision.get("reject").is_some());
}

#[test]
fn experiment_runs_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("grid.json");
    std::fs::write(
        &config,
        r#"{
            "graph": {"type": "synthetic", "nodes": 6, "latents": 0},
            "samples": 400,
            "clients": [2],
            "algorithms": ["pc"],
            "repetitions": 2,
            "base_seed": 3
        }"#,
    )
    .unwrap();
    let out_dir = dir.path().join("results");
    let status = bin()
        .args([
            "experiment",
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
            "--format",
            "csv",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out_dir.join("runs.csv").exists());
    assert!(out_dir.join("summary.csv").exists());
}

#[test]
fn exit_codes_distinguish_config_errors() {
    // Unknown algorithm: config error, exit 2.
    let dir = tempfile::tempdir().unwrap();
    let (data, _) = synth(dir.path());
    let status = bin()
        .args([
            "learn",
            "--data",
            data.to_str().unwrap(),
            "--algorithm",
            "notears",
            "--out",
            dir.path().join("x.graph").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Missing data file: config error, exit 2.
    let status = bin()
        .args([
            "ci-test",
            "--data",
            dir.path().join("missing.csv").to_str().unwrap(),
            "--x",
            "a",
            "--y",
            "b",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Bad config file content: exit 2.
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"algorithms\": []}").unwrap();
    let status = bin()
        .args(["experiment", "--config", bad.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn score_accepts_bundled_sachs_truth() {
    // An empty 11-node CPDAG against the bundled consensus network: SHD is
    // the full 17 edges.
    let dir = tempfile::tempdir().unwrap();
    let learned = dir.path().join("empty.graph");
    std::fs::write(
        &learned,
        "nodes: Raf,Mek,Plcg,PIP2,PIP3,Erk,Akt,PKA,PKC,P38,Jnk\nkind: cpdag\n",
    )
    .unwrap();
    let output = bin()
        .args(["score", "--learned", learned.to_str().unwrap(), "--truth", "sachs"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["shd"], 17);
    assert_eq!(report["extra"], 17);
}
