//! End-to-end checks of the `nocgate` binary: exit codes, result files,
//! config echo round-trips and the Q-table dump format.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nocgate"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nocgate_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn tiny_args(out: &Path) -> Vec<String> {
    [
        "--set",
        "mesh.rows=4",
        "--set",
        "mesh.cols=4",
        "--set",
        "traffic.total_packets=300",
        "--set",
        "traffic.pirs=[0.05]",
        "--set",
        "run.policies=[\"toot_coarse\"]",
        "--out-dir",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([out.to_string_lossy().into_owned()])
    .collect()
}

#[test]
fn run_writes_results_and_exits_zero() {
    let dir = temp_dir("run");
    let status = bin().arg("run").args(tiny_args(&dir)).status().unwrap();
    assert!(status.success());
    let json = std::fs::read_to_string(dir.join("results.json")).unwrap();
    assert!(json.contains("\"toot_coarse\""));
    assert!(json.contains("\"config\""));
    assert!(json.contains("\"seed\""));
    let csv = std::fs::read_to_string(dir.join("results.csv")).unwrap();
    assert!(csv.starts_with("policy,pattern,pir,status"));
    assert_eq!(csv.lines().count(), 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir_a = temp_dir("det_a");
    let dir_b = temp_dir("det_b");
    assert!(bin().arg("run").args(tiny_args(&dir_a)).status().unwrap().success());
    assert!(bin().arg("run").args(tiny_args(&dir_b)).status().unwrap().success());
    let a = std::fs::read(dir_a.join("results.json")).unwrap();
    let b = std::fs::read(dir_b.join("results.json")).unwrap();
    assert_eq!(a, b);
    std::fs::remove_dir_all(&dir_a).unwrap();
    std::fs::remove_dir_all(&dir_b).unwrap();
}

/// The resolved config echoed into results.json reproduces the same results
/// when fed back as a config file.
#[test]
fn echoed_config_round_trips() {
    let dir = temp_dir("echo");
    assert!(bin().arg("run").args(tiny_args(&dir)).status().unwrap().success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("results.json")).unwrap()).unwrap();
    let cfg: nocgate::SimConfig = serde_json::from_value(json["config"].clone()).unwrap();
    let toml_text = toml::to_string(&cfg).unwrap();
    let cfg_path = dir.join("echo.toml");
    std::fs::write(&cfg_path, toml_text).unwrap();

    let dir2 = temp_dir("echo2");
    let status = bin()
        .arg("run")
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out-dir")
        .arg(&dir2)
        .status()
        .unwrap();
    assert!(status.success());
    let a = std::fs::read(dir.join("results.json")).unwrap();
    let b = std::fs::read(dir2.join("results.json")).unwrap();
    assert_eq!(a, b);
    std::fs::remove_dir_all(&dir).unwrap();
    std::fs::remove_dir_all(&dir2).unwrap();
}

#[test]
fn odd_vcs_with_learning_policy_is_a_validation_error() {
    let out = bin()
        .args([
            "run",
            "--set",
            "router.vcs_per_port=3",
            "--set",
            "run.policies=[\"cafeen_full\"]",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("vcs_per_port must be even for VC partitioning"),
        "{stderr}"
    );
}

#[test]
fn unknown_key_is_rejected_with_suggestion() {
    let out = bin()
        .args(["run", "--set", "traffic.packet_lenth=3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("unknown config key 'traffic.packet_lenth'"), "{stderr}");
    assert!(stderr.contains("traffic.packet_length"), "{stderr}");
}

#[test]
fn dump_qtables_requires_a_learning_policy() {
    let out = bin()
        .args(["dump-qtables", "--set", "run.policies=[\"no_pg\"]"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no Q-tables under this policy"), "{stderr}");
}

#[test]
fn dump_qtables_writes_snapshots() {
    let dir = temp_dir("qt");
    let status = bin()
        .args([
            "dump-qtables",
            "--set",
            "mesh.rows=4",
            "--set",
            "mesh.cols=4",
            "--set",
            "traffic.total_packets=500",
            "--set",
            "traffic.pirs=[0.1]",
            "--set",
            "run.policies=[\"cafeen_full\"]",
            "--interval",
            "100",
            "--out-dir",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let initial = std::fs::read_to_string(dir.join("qtables-0.csv")).unwrap();
    let mut lines = initial.lines();
    assert_eq!(lines.next(), Some("router,state_key,action,q_value"));
    // 16 routers x 8 states x 2 actions on a 4x4 mesh, all zero-initialized
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 16 * 8 * 2);
    assert!(rows.iter().all(|r| r.ends_with(",0")));
    let snapshots = std::fs::read_dir(&dir)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("qtables-")
        })
        .count();
    assert!(snapshots >= 2, "expected several snapshots, got {snapshots}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_filter_runs_fast_criterion() {
    let out = bin().args(["verify", "state_space"]).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[PASS] criterion 10"), "{stdout}");
}

#[test]
fn compare_normalizes_against_the_baseline() {
    let dir = temp_dir("cmp");
    let status = bin().arg("compare").args(tiny_args(&dir)).status().unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.join("results.csv")).unwrap();
    // baseline was added and normalized columns are filled
    assert!(csv.contains("no_pg"), "{csv}");
    let toot_row = csv.lines().find(|l| l.starts_with("toot_coarse")).unwrap();
    let norm_energy: f64 = toot_row.split(',').nth(19).unwrap().parse().unwrap();
    assert!(norm_energy > 0.0 && norm_energy < 1.0, "{toot_row}");
    std::fs::remove_dir_all(&dir).unwrap();
}
