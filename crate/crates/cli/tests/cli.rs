use std::fs;
use std::path::Path;

use skl_cli::{run_cli, EXIT_ERROR, EXIT_FAIL, EXIT_PASS};

const SMALL: &str = r#"
n_paths = 3
master_seed = 11

[grid]
n_cells = 40

[solver]
eps = 0.02
t_end = 0.05
snapshots = 5

[data.initial]
profile = "sine"
amp = 1.0
mode = 1

[data.boundary.left]
profile = "ramp"
value = 0.5
t_ramp = 0.02
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> i32 {
    run_cli(std::iter::once("skl").chain(args.iter().copied()))
}

fn files(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read_to_string(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn summary(dir: &Path, stem: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}_summary.json"))).unwrap()).unwrap()
}

#[test]
fn validate_riemann_shock_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&["validate", "riemann_shock", "--out", out.to_str().unwrap()]), EXIT_PASS);
    let s = summary(&out, "validate_riemann_shock");
    assert_eq!(s["passed"], true);
    assert!(out.join("validate_riemann_shock.csv").exists());
}

#[test]
fn validate_exit_code_follows_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let code = run(&["validate", "boundary_layer", "--out", out.to_str().unwrap()]);
    let passed = summary(out, "validate_boundary_layer")["passed"].as_bool().unwrap();
    assert_eq!(code, if passed { EXIT_PASS } else { EXIT_FAIL });
}

#[test]
fn unknown_suite_is_an_error() {
    assert_eq!(run(&["validate", "riemann"]), EXIT_ERROR);
}

#[test]
fn zero_noise_solve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("snapshots = 5", "snapshots = 5\nk = 0") + "\n[noise]\nkind = \"zero\"\n";
    let cfg = write_config(dir.path(), "solve.toml", &text);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(run(&["solve", "--config", &cfg, "--seed", "5", "--out", out.to_str().unwrap()]), EXIT_PASS);
    }
    let fa = files(&a);
    assert_eq!(fa.len(), 3 + 1 + 1);
    assert_eq!(fa, files(&b));
}

#[test]
fn artifacts_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k.toml", SMALL);
    let mut outs = Vec::new();
    for w in ["1", "3"] {
        let out = dir.path().join(format!("w{w}"));
        for cmd in ["solve", "kinetic", "reduction"] {
            let code = run(&[cmd, "--config", &cfg, "--workers", w, "--out", out.to_str().unwrap()]);
            assert_ne!(code, EXIT_ERROR, "{cmd}");
        }
        outs.push(files(&out));
    }
    assert_eq!(outs[0].len(), outs[1].len());
    for (a, b) in outs[0].iter().zip(&outs[1]) {
        assert_eq!(a.0, b.0);
        assert!(a.1 == b.1, "{} differs", a.0);
    }
}

#[test]
fn every_artifact_carries_version_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.to_string() + "\n[data2.initial]\nprofile = \"sine\"\namp = 0.5\nmode = 1\n";
    let cfg = write_config(dir.path(), "c.toml", &text);
    let out = dir.path().join("out");
    let code = run(&["contraction", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_ne!(code, EXIT_ERROR);
    let s = summary(&out, "contraction");
    assert_eq!(s["master_seed"], 11);
    assert_eq!(s["config"]["data2"]["initial"]["amp"], 0.5);
    for name in s["artifacts"].as_array().unwrap() {
        let text = fs::read_to_string(out.join(name.as_str().unwrap())).unwrap();
        if text.starts_with('#') {
            let first = text.lines().next().unwrap();
            assert!(first.contains("version=skl-core") && first.contains("\"master_seed\":11"), "{first}");
        } else {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert!(v["version"].as_str().unwrap().starts_with("skl-core"));
            assert_eq!(v["config"]["n_paths"], 3);
        }
    }
}

#[test]
fn json_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{"n_paths": 2, "grid": {"n_cells": 30}, "solver": {"eps": 0.05, "t_end": 0.02, "k": 4},
        "data": {"initial": {"profile": "constant", "value": 0.5}}}"#;
    let cfg = write_config(dir.path(), "r.json", json);
    let out = dir.path().join("out");
    assert_eq!(run(&["reduction", "--config", &cfg, "--out", out.to_str().unwrap()]), EXIT_PASS);
}

#[test]
fn reduction_reports_gap_per_viscosity() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.to_string() + "\n[reduction]\neps = [0.1, 0.05, 0.02]\n";
    let cfg = write_config(dir.path(), "r.toml", &text);
    let out = dir.path().join("out");
    assert_eq!(run(&["reduction", "--config", &cfg, "--out", out.to_str().unwrap()]), EXIT_PASS);
    let table = fs::read_to_string(out.join("reduction_eps.csv")).unwrap();
    assert_eq!(table.lines().count(), 2 + 3);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(run(&["solve", "--config", missing.to_str().unwrap()]), EXIT_ERROR);
    assert_eq!(run(&["solve"]), EXIT_ERROR);
    let typo = write_config(dir.path(), "typo.toml", &SMALL.replace("eps = 0.02", "vicosity = 0.02\neps = 0.02"));
    assert_eq!(run(&["solve", "--config", &typo]), EXIT_ERROR);
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    assert_eq!(run(&["contraction", "--config", &cfg]), EXIT_ERROR);
    assert_eq!(run(&["bogus"]), EXIT_ERROR);
}

#[test]
fn blocked_output_dir_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = write_config(dir.path(), "s.toml", SMALL);
    let out = blocker.join("sub");
    assert_eq!(run(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]), EXIT_ERROR);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_skl");
    let dir = tempfile::tempdir().unwrap();
    let status = std::process::Command::new(bin).args(["solve", "--config", "/nonexistent/cfg.toml"]).status().unwrap();
    assert_eq!(status.code(), Some(EXIT_ERROR));
    let out =
        std::process::Command::new(bin).args(["validate", "riemann_shock", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_PASS));
    let printed = String::from_utf8(out.stdout).unwrap();
    assert!(printed.trim().ends_with("validate_riemann_shock_summary.json"), "{printed}");
}
