//! End-to-end runs of the `wmmse` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wmmse_core::config::ProblemConfig;

const SCALAR: &str = r#"{"dimension":1,"mu0":[0.0],"sigma0":[[1.0]],"channels":[{"lambda":1.0,"sigma_n":[[1.0]]}],"epsilon":0.1}"#;

fn wmmse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wmmse")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn fig1() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples/paper_fig1.json")
        .to_string_lossy()
        .into_owned()
}

fn field(stdout: &str, name: &str) -> f64 {
    let line = stdout.lines().find(|l| l.starts_with(name)).unwrap();
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

/// Larger root of `(s - 1 - ln s)/2 = eps`.
fn scalar_upper_variance(eps: f64) -> f64 {
    let (mut a, mut b) = (1.0f64, 100.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if 0.5 * (m - 1.0 - m.ln()) < eps {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn bound_on_scalar_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SCALAR);
    let out = wmmse(&["bound", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(field(&text, "nominal"), 0.5);
    let s = scalar_upper_variance(0.1);
    assert!((field(&text, "upper") - s / (1.0 + s)).abs() < 1e-9);
    assert!(field(&text, "lower") < 0.5);
}

#[test]
fn zero_radius_collapses_to_nominal() {
    let out = wmmse(&["bound", "--config", &fig1(), "--epsilon", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let nominal = field(&text, "nominal");
    assert!((nominal - 18.9199113647).abs() < 1e-9);
    assert_eq!(field(&text, "upper"), nominal);
    assert_eq!(field(&text, "lower"), nominal);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SCALAR);
    let cfg = cfg.to_str().unwrap();

    let unknown = write(dir.path(), "u.json", &SCALAR.replace("\"epsilon\"", "\"radius\":1,\"epsilon\""));
    assert_eq!(wmmse(&["bound", "--config", unknown.to_str().unwrap()]).status.code(), Some(1));
    let asym = write(dir.path(), "a.json", &SCALAR.replace("\"dimension\":1", "\"dimension\":2"));
    assert_eq!(wmmse(&["bound", "--config", asym.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(wmmse(&["bound", "--config", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(wmmse(&["bound", "--config", cfg, "--epsilon", "-1"]).status.code(), Some(1));
    assert_eq!(wmmse(&["sweep-p", "--config", cfg, "--grid", "2,1"]).status.code(), Some(1));
    assert_eq!(wmmse(&["verify", "--config", cfg, "--prior", "cauchy"]).status.code(), Some(1));
    assert_eq!(wmmse(&["bound"]).status.code(), Some(1));
    assert_eq!(wmmse(&["--help"]).status.code(), Some(0));

    // the lower branch cannot reach this radius
    let out = wmmse(&["bound", "--config", cfg, "--epsilon", "1e4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not reachable"));
}

#[test]
fn sweep_csv_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = wmmse(&["sweep-p", "--config", &fig1(), "--grid", "0.51:10:7", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 8);
    assert!(lines[0].starts_with("p,"));
    let stdout = wmmse(&["sweep-p", "--config", &fig1(), "--grid", "0.51:10:7"]).stdout;
    assert_eq!(String::from_utf8(stdout).unwrap(), text);
}

#[test]
fn sweep_ball_conventions_differ() {
    let run = |c: &str| {
        let out = wmmse(&["sweep-ball", "--config", &fig1(), "--grid", "0.1,1,10", "--convention", c]);
        assert_eq!(out.status.code(), Some(0));
        String::from_utf8(out.stdout).unwrap()
    };
    let a = run("per-coordinate");
    let b = run("total-second-moment");
    assert!(a.starts_with("R,") && b.starts_with("R,"));
    assert_ne!(a, b);
}

#[test]
fn scenario_writes_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scenario.json");
    let status = wmmse(&[
        "scenario", "--distances", "0,3", "--rho0", "1", "--gamma", "1", "--m", "2", "--sigma0", "1",
        "--dimension", "2", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(status.status.code(), Some(0));
    let cfg = ProblemConfig::load(&out).unwrap();
    assert_eq!(cfg.channels.len(), 2);
    assert_eq!(cfg.channels[0].sigma_n, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert!((cfg.channels[1].sigma_n[0][0] - 10.0).abs() < 1e-12);
    assert!((cfg.channels[1].sigma_n[1][1] - 10.0).abs() < 1e-12);
    assert_eq!(cfg.channels[1].lambda, 1.0);
    let bound = wmmse(&["bound", "--config", out.to_str().unwrap()]);
    assert_eq!(bound.status.code(), Some(0));

    let bad = wmmse(&[
        "scenario", "--distances", "1", "--rho0", "1", "--gamma", "1", "--m", "4", "--sigma0", "1",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn verify_gaussian_reference() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SCALAR);
    let out = wmmse(&["verify", "--config", cfg.to_str().unwrap(), "--prior", "gaussian", "--n-outer", "400", "--n-inner", "400", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().lines().last() == Some("PASS"));
}
