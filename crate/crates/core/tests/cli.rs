use std::path::Path;
use std::process::{Command, Output};

use spinlab::experiments::ExperimentConfig;

fn spinlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinlab"))
        .args(args)
        .output()
        .expect("spawn spinlab")
}

fn soliton_config(dir: &Path) -> String {
    let mut c = ExperimentConfig::desk_scale();
    c.data.a = 0.0;
    c.data.b = 0.0;
    let p = dir.join("soliton.toml");
    std::fs::write(&p, c.to_toml()).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn missing_config_is_a_config_error() {
    let o = spinlab(&["attract", "--config", "/nonexistent/spinlab.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
}

#[test]
fn unknown_key_and_flag_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    let text = ExperimentConfig::desk_scale()
        .to_toml()
        .replace("[grid]", "[grid]\nspacing = 0.3");
    std::fs::write(&p, text).unwrap();
    assert_eq!(
        spinlab(&["freewave", "--config", p.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        spinlab(&["freewave", "--no-such-flag"]).status.code(),
        Some(2)
    );
    assert_eq!(spinlab(&[]).status.code(), Some(2));
}

#[test]
fn invalid_values_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::desk_scale();
    c.run.t_max = 70.0;
    let p = dir.path().join("wrap.toml");
    std::fs::write(&p, c.to_toml()).unwrap();
    let o = spinlab(&["attract", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wrap-free"));
}

#[test]
fn printed_config_round_trips() {
    let o = spinlab(&["config", "--quick"]);
    assert_eq!(o.status.code(), Some(0));
    let c = ExperimentConfig::from_toml(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(c, ExperimentConfig::desk_scale().quick());
}

#[test]
fn soliton_attract_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = soliton_config(dir.path());
    let mut csv = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = spinlab(&[
            "attract",
            "--quick",
            "--config",
            &cfg,
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert_eq!(o.status.code(), Some(0), "{stdout}");
        assert!(stdout.contains("PASS C1:"));
        assert!(!stdout.contains("FAIL"));
        let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
        assert!(summary.contains("seed = 7"));
        assert!(summary.contains("all.pass = true"));
        csv.push(std::fs::read(out.join("soliton.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
    let head = String::from_utf8_lossy(&csv[0]);
    let first = head.lines().next().unwrap();
    assert!(first.starts_with("# spinlab-csv-v1 soliton.csv config_sha256="));
    assert!(first.ends_with("seed=7"));
}
