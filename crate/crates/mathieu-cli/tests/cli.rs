use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mathieu(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mathieu")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

#[test]
fn classify_elegant() {
    let dir = tempfile::tempdir().unwrap();
    let o = mathieu(&["classify", "--a", "1", "--b", "1"], dir.path());
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert_eq!(v["expansion_form"], "Elegant");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["asymptotically_spectral"], "holds");
}

#[test]
fn classify_gasymov() {
    let dir = tempfile::tempdir().unwrap();
    let o = mathieu(&["classify", "--a", "0", "--b", "1"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout_json(&o)["expansion_form"], "Gasymov");
}

#[test]
fn free_spectrum_curves() {
    let dir = tempfile::tempdir().unwrap();
    let o = mathieu(&["spectrum", "--a", "0", "--b", "0", "--nmax", "3"], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,t,re_lambda,im_lambda,residual");
    let mut rows = 0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let expect = (2.0 * PI * f[0] + f[1].abs()).powi(2);
        assert!((f[2] - expect).abs() < 1e-9 && f[3].abs() < 1e-12, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 7 * 128);
}

#[test]
fn identical_config_gives_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["spectrum", "--a", "1+0.5i", "--b", "-2i", "--nmax", "2", "--tpoints", "64"];
    let read = |name: &str| fs::read(dir.path().join(name)).unwrap();
    assert!(mathieu(&args, dir.path()).status.success());
    let first = (read("spectrum.json"), read("curves.csv"), read("comparison.csv"));
    assert!(mathieu(&args, dir.path()).status.success());
    assert_eq!(first, (read("spectrum.json"), read("curves.csv"), read("comparison.csv")));
}

#[test]
fn validation_errors_exit_one_with_json() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["spectrum", "--a", "1", "--b", "1", "--tpoints", "10"],
        vec!["spectrum", "--a", "1", "--b", "oops"],
        vec!["classify", "--a", "1"],
        vec!["expand", "--a", "0", "--b", "1", "--h", "0.5"],
        vec!["frobnicate"],
    ] {
        let o = mathieu(&args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err: Value = serde_json::from_slice(&o.stderr).expect("error JSON on stderr");
        assert!(err["kind"].is_string() && err["message"].is_string());
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("job.txt");
    fs::write(&conf, "a = 0\nb = 1\nnmax = 2\n").unwrap();
    let o = mathieu(&["classify", "--config", conf.to_str().unwrap(), "--a", "1"], dir.path());
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert_eq!(v["expansion_form"], "Elegant");
    assert_eq!(v["config"]["n_max"], 2);
    // the written job file reproduces the run
    let job = fs::read_to_string(dir.path().join("job.conf")).unwrap();
    assert!(job.contains("a = 1+0i") && job.contains("b = 1+0i"));
}

#[test]
fn expand_and_profile_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = mathieu(&["expand", "--a", "0.5", "--b", "0.5", "--nmax", "6"], dir.path());
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&fs::read(dir.path().join("expansion.json")).unwrap()).unwrap();
    assert_eq!(v["form"], "Elegant");
    assert!(v["max_residual"].as_f64().unwrap() < 1e-2);
    assert_eq!(v["per_point"].as_array().unwrap().len(), 9);

    let o = mathieu(&["profile", "--a", "1", "--b", "2", "--nmax", "1", "--tpoints", "64"], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(text.starts_with("n,t,method,abs_d\n"));
}
