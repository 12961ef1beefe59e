use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cbjump::validate::experiments::ExperimentOutcome;

const ATOMS: &str = r#"{"alpha": 0, "beta": 1, "levy": {"family": "finite_atoms", "params": {"atoms": [[1, 1]]}}}"#;
const STABLE: &str = r#"{"alpha": 0, "levy": {"family": "stable_power", "params": {"gamma": 1.5, "c": 1}}}"#;

fn cbjump(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbjump"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn global_max_jump_row() {
    let dir = tempfile::tempdir().unwrap();
    let mech = config(dir.path(), "atoms.json", ATOMS);
    let o = cbjump(dir.path(), &["maxjump", "--mech", mech.to_str().unwrap(), "--x", "1", "--t", "inf", "--r", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&dir.path().join("maxjump.csv"));
    assert_eq!(header, ["r", "cdf", "density", "asymptote"]);
    let cdf: f64 = rows[0][1].parse().unwrap();
    assert!((cdf - 0.5390030827).abs() < 1e-9);

    let text = fs::read_to_string(dir.path().join("maxjump.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["h0"], true);
    // below the only atom, sup ≤ r means no jump at all
    assert_eq!(v["atom_at_zero"].as_f64().unwrap(), cdf);
    let again: serde_json::Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(again, v);
}

#[test]
fn missing_or_bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = cbjump(dir.path(), &["maxjump", "--mech", "no-such-file.json", "--r", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no-such-file.json"));

    let bad = config(dir.path(), "bad.json", r#"{"alpha": 0, "levy": {"family": "stable_power", "params": {"gamma": 3, "c": 1}}}"#);
    let o = cbjump(dir.path(), &["phi", "--mech", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = cbjump(dir.path(), &["validate", "--experiment", "no-such-experiment"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cbjump(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn phi_table_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mech = config(dir.path(), "stable.json", STABLE);
    let o = cbjump(dir.path(), &["phi", "--mech", mech.to_str().unwrap(), "--lambda", "0:4:9"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&dir.path().join("phi.csv"));
    assert_eq!(header, ["lambda", "phi", "phi_prime"]);
    assert_eq!(rows.len(), 9);
    for r in rows {
        let (l, p): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        assert!((p - l.powf(1.5)).abs() < 1e-12 * (1.0 + p));
        assert_eq!(format!("{p}"), r[1]);
    }
}

#[test]
fn flow_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mech = config(dir.path(), "stable.json", STABLE);
    let o = cbjump(dir.path(), &["flow", "--mech", mech.to_str().unwrap(), "--lambda", "4", "--t", "3", "--points", "4"]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&dir.path().join("flow.csv"));
    let last: f64 = rows[3][1].parse().unwrap();
    assert!((last - 0.25).abs() < 1e-8);
}

#[test]
fn simulate_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mech = config(dir.path(), "stable.json", STABLE);
    let m = mech.to_str().unwrap();
    let args = ["simulate", "--mech", m, "--dt", "0.01", "--T", "2", "--n", "50", "--record", "1,2", "--seed", "3", "--paths"];
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(cbjump(&a, &args).status.success());
    let mut threaded = vec!["--threads", "2"];
    threaded.extend_from_slice(&args);
    assert!(cbjump(&b, &threaded).status.success());
    for f in ["simulate.csv", "paths.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (header, rows) = csv_rows(&a.join("simulate.csv"));
    assert_eq!(header.len(), 11);
    assert_eq!(rows.len(), 50);
    for r in &rows {
        let x2: f64 = r[10].parse().unwrap();
        assert!(x2 >= 0.0);
    }
    let o = cbjump(dir.path(), &["simulate", "--mech", m, "--n", "5000", "--paths"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_is_reproducible_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["validate", "--experiment", "gmj-atoms", "--seed", "7", "--n", "2000"];
    let first = cbjump(&a, &args);
    let second = cbjump(&b, &args);
    assert!(matches!(first.status.code(), Some(0 | 1)));
    assert_eq!(first.status.code(), second.status.code());
    let (ta, tb) = (
        fs::read_to_string(a.join("validate-gmj-atoms.json")).unwrap(),
        fs::read_to_string(b.join("validate-gmj-atoms.json")).unwrap(),
    );
    assert_eq!(ta, tb);
    let out: ExperimentOutcome = serde_json::from_str(&ta).unwrap();
    assert_eq!(serde_json::to_string_pretty(&out).unwrap() + "\n", ta);
    assert_eq!(first.status.code() == Some(0), out.pass());
}

#[test]
fn failed_validation_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    // a single high rung cannot collect enough conditioned paths
    let o = cbjump(dir.path(), &["validate", "--experiment", "tms-feller", "--ladder", "3", "--n", "2000"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stdout));
    let out: ExperimentOutcome =
        serde_json::from_str(&fs::read_to_string(dir.path().join("validate-tms-feller.json")).unwrap()).unwrap();
    assert!(!out.pass());
}
