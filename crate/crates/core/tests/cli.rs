use std::path::{Path, PathBuf};
use std::process::Command;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn nlpme() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nlpme"));
    c.env_remove("NLPME_OUTPUT");
    c
}

const FAILING: &str = r#"experiment = "simulate"

[model]
m = 2.0
s = 0.5

[grid]
half_length = 8.0
n = 256

[time]
t_end = 0.2
snapshots = 3

[initial_data]
kind = "gaussian"
mass = 1.0
width = 0.5

[scaling]
lambda = 2.0
t = 0.2
tolerance = 1e-30
"#;

#[test]
fn zero_config_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlpme()
        .args(["simulate", "--config"])
        .arg(configs().join("zero.toml"))
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("status: pass"));
}

#[test]
fn environment_variable_redirects_output() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_env");
    let status = nlpme()
        .env("NLPME_OUTPUT", &target)
        .args(["simulate", "--config"])
        .arg(configs().join("zero.toml"))
        .status()
        .unwrap();
    assert!(status.success());
    assert!(target.join("manifest.txt").exists());
}

#[test]
fn mismatched_experiment_is_an_error() {
    let out = nlpme()
        .args(["smoothing", "--config"])
        .arg(configs().join("zero.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("simulate"));
    let out = nlpme()
        .args(["nope", "--config", "x.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("transform-check"));
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fail.toml");
    std::fs::write(&cfg, FAILING).unwrap();
    let out = nlpme()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL scaling_relative_l1"));
}

#[test]
fn transform_manifest_reports_residual_closure() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlpme()
        .args(["transform-check", "--config"])
        .arg(configs().join("transform.toml"))
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("residual_closure_ratio"));
}
