use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use widthlab::stability::SurfaceMesh;
use widthlab::varifold::DiscreteVarifold;
use widthlab_cli::{run_suite, RunConfig, Suite, OUT_ENV};

fn widthlab(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_widthlab"));
    cmd.args(args).env_remove(OUT_ENV);
    if let Some(p) = out_env {
        cmd.env(OUT_ENV, p);
    }
    cmd.output().unwrap()
}

fn report(dir: &Path, suite: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{suite}.json"))).unwrap()).unwrap()
}

#[test]
fn widths_suite_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = widthlab(&["run", "--suite", "widths", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path(), "widths");
    assert_eq!(r["pass"], true);
    let checks = r["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 16);
    assert!(checks.iter().all(|c| c["anchor"].as_str().is_some_and(|a| !a.is_empty())));
    let csv = std::fs::read_to_string(dir.path().join("widths.csv")).unwrap();
    assert!(csv.starts_with("name,anchor,basis,relation,measured,expected,tolerance,pass\n"));
    assert_eq!(csv.lines().count(), 17);
    assert!(dir.path().join("widths-slices.csv").exists());
}

#[test]
fn reports_are_byte_identical_for_a_fixed_seed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = widthlab(
            &["run", "--suite", "brendle,isoperimetric", "--seed", "7", "--samples", "2000", "--out", d.path().to_str().unwrap()],
            None,
        );
        assert!(out.status.code().is_some());
    }
    for f in ["brendle.json", "brendle.csv", "brendle-decay.csv", "isoperimetric.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn parallel_run_matches_sequential() {
    let cfg = RunConfig { suites: vec![Suite::Widths, Suite::Comparison], ..RunConfig::default() };
    let seq = widthlab_cli::run_all(&cfg);
    let par = widthlab_cli::run_all(&RunConfig { parallel: true, ..cfg });
    for (s, p) in seq.iter().zip(&par) {
        assert_eq!(serde_json::to_string(s).unwrap(), serde_json::to_string(p).unwrap());
    }
}

#[test]
fn brendle_suite_reports_the_k1_divergence_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = widthlab(
        &["run", "--suite", "brendle", "--seed", "42", "--samples", "5000", "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("FAIL divergence bound n=3 k=1 [divergence bound]: measured"), "{stderr}");
    let r = report(dir.path(), "brendle");
    for c in r["checks"].as_array().unwrap() {
        let name = c["name"].as_str().unwrap();
        let k1_bound = name.starts_with("divergence bound") && name.ends_with("k=1");
        assert_eq!(c["pass"].as_bool().unwrap(), !k1_bound, "{name}");
    }
}

#[test]
fn stability_suite_certifies_instability() {
    let cfg = RunConfig { resolution: Some(10), ..RunConfig::default() };
    let r = run_suite(Suite::Stability, &cfg);
    let lambda: Vec<_> = r.checks.iter().filter(|c| c.name.ends_with("lambda1")).collect();
    assert_eq!(lambda.len(), 3);
    assert!(lambda.iter().all(|c| c.pass && c.measured < 0.0));
    assert!(r.checks.iter().any(|c| c.name == "catenoid Q(1, 1)" && c.pass));
}

#[test]
fn tolerance_scale_tightens_checks() {
    let cfg = RunConfig { tolerance_scale: 1e-6, ..RunConfig::default() };
    let r = run_suite(Suite::Sweepout1d, &cfg);
    assert!(!r.pass);
    let r = run_suite(Suite::Sweepout1d, &RunConfig::default());
    assert!(r.pass);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = widthlab(&["run", "--suite", "widths"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("widths.json").exists());

    // the flag wins over the environment
    let other = tempfile::tempdir().unwrap();
    let out = widthlab(&["run", "--suite", "widths", "--out", other.path().to_str().unwrap()], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    assert!(other.path().join("widths.json").exists());
}

#[test]
fn config_file_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out_dir = dir.path().join("reports");
    std::fs::write(&cfg, format!("suite = widths\nseed = 3\nout = {}\n", out_dir.display())).unwrap();
    let out = widthlab(&["run", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&out_dir, "widths")["config"]["seed"], 3);

    let d = dir.path().to_str().unwrap();
    std::fs::write(&cfg, "suite = widths\nfrobnicate = 1\n").unwrap();
    for args in [
        vec!["run", "--config", cfg.to_str().unwrap(), "--out", d],
        vec!["run", "--suite", "nope", "--out", d],
        vec!["run", "--suite", "widths", "--tolerance-scale", "-1", "--out", d],
        vec!["run", "--config", "/nonexistent/run.cfg"],
        vec!["export", "torus", "--out", d],
    ] {
        let out = widthlab(&args, None);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
}

#[test]
fn export_varifold_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["equatorial-disk", "offcenter-disk", "doubled-disk"] {
        let path = dir.path().join(format!("{name}.jsonl"));
        let out = widthlab(&["export", name, "--resolution", "20", "--out", path.to_str().unwrap()], None);
        assert_eq!(out.status.code(), Some(0));
        let text = std::fs::read_to_string(&path).unwrap();
        let v = DiscreteVarifold::read_json_lines(text.as_bytes(), 3, 2).unwrap();
        assert!(v.atoms.len() > 200, "{name}: {}", v.atoms.len());
    }
}

#[test]
fn export_mesh_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hyp.off");
    let out = widthlab(&["export", "geodesic-disk-hyperbolic", "--out", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let m = SurfaceMesh::read_off(std::fs::read(&path).unwrap().as_slice()).unwrap();
    assert_eq!(m.curvature().0, -1.0);
    for (r, b) in m.radii().iter().zip(&m.is_boundary) {
        if *b {
            assert!((r - 1.0).abs() <= 1e-8);
        }
    }

    let path = dir.path().join("cat.off");
    let out = widthlab(&["export", "critical-catenoid", "--resolution", "64", "--out", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("OFF euclidean K=0.0 R=1.0\n"));

    // too coarse for the minimality gate
    let out = widthlab(&["export", "critical-catenoid", "--resolution", "16", "--out", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mean curvature"));
}
