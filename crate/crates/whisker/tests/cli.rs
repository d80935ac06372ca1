use std::path::Path;
use std::process::Command;
use whisker::cli::{cmd_certify, cmd_compute, cmd_diagnose, RunConfig};

const SMALL: &str = r#"
version = 1

[system]
kind = "twisted_saddle"
omega = 0.6180339887498949
alpha = 0.41421356237309515
twists = [0.1, 0.15]
mu = 0.3
eps = 0.2

[grid]
sizes = [8, 8]

[newton]
max_iters = 2
tol = 1e-10

[initial]
kind = "perturbed"
seed = 11
modes = 2
amplitude = 1e-4
max_mode = 1

[certificate]
russmann = { kind = "fixed", value = 1.0 }
d2phi_samples = 2
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_whisker"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn compute_then_diagnose_reproduces_norms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_toml(SMALL).unwrap();
    let out = cmd_compute(&cfg, dir.path()).unwrap();
    let report = cmd_diagnose(&cfg, dir.path()).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1e-300);
    assert!(rel(out.summary.norm_ek, report.norm_ek) <= 1e-12, "{} vs {}", out.summary.norm_ek, report.norm_ek);
    assert!(rel(out.summary.norm_ew, report.norm_ew) <= 1e-12);
    let cert = cmd_certify(&cfg, dir.path()).unwrap();
    assert_eq!(cert.kam_verdict, cert.lhs_kam < 1.0);
    for name in ["k.fourier", "w.fourier", "solution.json", "iterations.jsonl", "measured.json", "bounds.json",
        "diagnostics.json", "certificate.json"]
    {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
}

#[test]
fn dumps_are_deterministic() {
    let cfg = RunConfig::from_toml(SMALL).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cmd_compute(&cfg, a.path()).unwrap();
    cmd_compute(&cfg, b.path()).unwrap();
    for name in ["k.fourier", "w.fourier", "measured.json"] {
        let (x, y) = (std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let bad = write_config(dir.path(), &SMALL.replace("version = 1", "version = 9"));
    let output = bin().args(["compute", "--config"]).arg(&bad).arg("--out").arg(&out).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("version"));

    // One iteration from this start does not reach the tolerance.
    let cfg = write_config(dir.path(), &SMALL.replace("max_iters = 2", "max_iters = 1"));
    let status = bin()
        .args(["compute", "--log-level", "error", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .env("WHISKER_THREADS", "1")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    let status = bin().args(["certify", "--log-level", "error", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));

    let bounds = out.join("bounds.json");
    let mut json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&bounds).unwrap()).unwrap();
    json.as_object_mut().unwrap().remove("sigma_b");
    std::fs::write(&bounds, json.to_string()).unwrap();
    let output = bin().args(["certify", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("sigma_b"));
}
