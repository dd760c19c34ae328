use std::path::Path;
use std::process::Command;

use pinchfold_cli::{run, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};
use serde_json::Value;

fn run_args(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("pinchfold").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn data(stdout: &str) -> Value {
    let v: Value = serde_json::from_str(stdout).unwrap();
    v["data"].clone()
}

fn dir_arg(d: &Path) -> String {
    d.display().to_string()
}

#[test]
fn canards_at_reference_parameters() {
    let d = tempfile::tempdir().unwrap();
    let (code, out, err) = run_args(&["canards", "--mu", "0.11764705882352941", "--eps", "0.05", "--out", &dir_arg(d.path())]);
    assert_eq!(code, EXIT_OK, "{err}");
    let v = data(&out);
    let run = &v["runs"][0];
    assert_eq!(run["count"], 3);
    assert_eq!(run["rotation_numbers"], serde_json::json!([1, 2, 3]));
    assert!(d.path().join("canard_mu0p11764705882352941_r3.csv").exists());
    assert!(d.path().join("canards.json").exists());
}

#[test]
fn classify_sans_point() {
    let d = tempfile::tempdir().unwrap();
    let (code, out, _) = run_args(&["classify", "--level", "Sans", "--set", "classify.points=[[0.0, -1.0]]", "--out", &dir_arg(d.path())]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(data(&out)["points"][0]["class"], "AttractingSliding");
}

#[test]
fn classify_singularity_from_config_file() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "command = \"classify\"\nout_dir = {:?}\n[classify]\npoints = [[1.0, 1.0]]\nsingularity = [0.5, 3.0]\n",
            dir_arg(d.path())
        ),
    )
    .unwrap();
    let (code, out, err) = run_args(&["--config", &dir_arg(&cfg)]);
    assert_eq!(code, EXIT_OK, "{err}");
    let v = data(&out);
    assert_eq!(v["singularity"]["tag"], "FoldedNode");
}

#[test]
fn empty_config_prints_usage() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("empty.toml");
    std::fs::write(&cfg, "").unwrap();
    let (code, out, err) = run_args(&["--config", &dir_arg(&cfg)]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(out.is_empty());
    assert!(err.contains("Usage: pinchfold"), "{err}");
}

#[test]
fn configuration_errors_exit_with_two() {
    let (code, _, err) = run_args(&["primaries", "--mu", "1.5"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("0 < mu < 1"));
    let (code, _, err) = run_args(&["primaries", "--eps", "0.6"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("0 < eps < 1/2"));
    assert_eq!(run_args(&["primaries", "--set", "nonsense"]).0, EXIT_CONFIG);
    assert_eq!(run_args(&["primaries", "--set", "params.colour=1"]).0, EXIT_CONFIG);
    assert_eq!(run_args(&["launch"]).0, EXIT_CONFIG);
    assert_eq!(run_args(&["--config", "/nonexistent/run.toml", "primaries"]).0, EXIT_CONFIG);
}

#[test]
fn numerical_failure_writes_diagnostic() {
    let d = tempfile::tempdir().unwrap();
    let (code, _, err) = run_args(&["simulate", "--set", "simulate.tol=1e-40", "--out", &dir_arg(d.path())]);
    assert_eq!(code, EXIT_NUMERICAL);
    let v: Value = serde_json::from_str(&err).unwrap();
    assert_eq!(v["data"]["command"], "simulate");
    assert!(v["data"]["error"].as_str().unwrap().contains("step size underflow"));
    assert!(d.path().join("diagnostic.json").exists());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        for cmd in ["simulate", "primaries", "manifolds"] {
            let (code, _, err) = run_args(&[cmd, "--k", "10", "--out", &dir_arg(d.path())]);
            assert_eq!(code, EXIT_OK, "{cmd}: {err}");
        }
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 5);
    for n in names {
        let x = std::fs::read(a.path().join(&n)).unwrap();
        let y = std::fs::read(b.path().join(&n)).unwrap();
        assert_eq!(x, y, "{n:?} differs");
    }
}

#[test]
fn files_carry_provenance() {
    let d = tempfile::tempdir().unwrap();
    let (code, _, _) = run_args(&["manifolds", "--k", "10", "--out", &dir_arg(d.path())]);
    assert_eq!(code, EXIT_OK);
    let csv = std::fs::read_to_string(d.path().join("sections_k10.csv")).unwrap();
    for key in ["# generator: pinchfold", "# mu: ", "# eps: ", "# k: ", "# bvp_tol: "] {
        assert!(csv.contains(key), "missing {key}");
    }
    assert!(csv.contains("\nz,U,side,k\n"));
    assert!(csv.contains(",attracting,") && csv.contains(",repelling,"));
    let j: Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("intersections_k10.json")).unwrap()).unwrap();
    assert_eq!(j["data"]["crossings"].as_array().unwrap().len(), 4);
    assert_eq!(j["provenance"]["k"], "1.0000000000000000e1");
}

#[test]
fn worker_pool_size_comes_from_the_environment() {
    let exe = env!("CARGO_BIN_EXE_pinchfold");
    let d = tempfile::tempdir().unwrap();
    let bad = Command::new(exe)
        .args(["primaries", "--out", &dir_arg(d.path())])
        .env("PINCHFOLD_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_CONFIG));
    let one = Command::new(exe)
        .args(["canards", "--set", "canards.mu=[0.3, 0.1]", "--out", &dir_arg(d.path())])
        .env("PINCHFOLD_WORKERS", "1")
        .output()
        .unwrap();
    let two = Command::new(exe)
        .args(["canards", "--set", "canards.mu=[0.3, 0.1]", "--out", &dir_arg(d.path())])
        .env("PINCHFOLD_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(EXIT_OK));
    assert_eq!(one.stdout, two.stdout);
    let v = data(&String::from_utf8(one.stdout).unwrap());
    assert_eq!(v["runs"][0]["count"], 1);
    assert_eq!(v["runs"][1]["count"], 4);
}
