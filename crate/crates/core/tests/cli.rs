use std::path::Path;
use std::process::{Command, Output};

use stablelab::config::{ExperimentConfig, ExperimentKind};

fn stablelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stablelab"))
        .args(args)
        .output()
        .unwrap()
}

fn reference() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.cfg")
}

#[test]
fn reference_config_parses_for_every_kind() {
    for kind in ExperimentKind::ALL {
        let cfg = ExperimentConfig::load(&reference(), Some(kind))
            .unwrap_or_else(|e| panic!("{kind:?}: {e}"));
        assert_eq!(cfg.seed, 1);
    }
}

#[test]
fn acceptance_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/acceptance");
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let cfg =
            ExperimentConfig::load(&p, None).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        cfg.check_admissibility()
            .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn lp_check_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = stablelab(&[
        "lp-check",
        "--out",
        dir.path().to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS"));
    assert!(!stdout.contains("FAIL"));
    for f in ["config.json", "summary.json", "profile.csv"] {
        assert!(dir.path().join("lp-check").join(f).is_file(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("lp-check/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["seed"], 5);
    assert_eq!(summary["status"], "PASS");

    let rep = stablelab(&["report", "--out", dir.path().to_str().unwrap()]);
    assert!(rep.status.success());
    assert!(dir.path().join("index.json").is_file());
    assert!(dir.path().join("plots/lp-check-profile.csv").is_file());
}

#[test]
fn missing_kernel_name_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("a.cfg");
    std::fs::write(&cfg, "kind = simulate\n[kernel]\nalpha = 1.5\n").unwrap();
    let out = stablelab(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("kernel.name"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn inadmissible_drift_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("a.cfg");
    std::fs::write(
        &cfg,
        "[kernel]\nname = constant\nalpha = 1.2\n[drift]\nkind = rough\nbeta = -0.5\n",
    )
    .unwrap();
    let out = stablelab(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("-0.5"));
    assert!(!dir.path().join("simulate").exists());
}

#[test]
fn unknown_key_reports_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("a.cfg");
    std::fs::write(&cfg, "[grid]\nn = 64\nsize = 3\n").unwrap();
    let out = stablelab(&["lp-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("grid.size"), "{err}");
}

#[test]
fn empty_report_is_report_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = stablelab(&["report", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("REPORT-ONLY"));
}
