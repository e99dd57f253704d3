//! End-to-end runs of the `sosmm` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn sosmm(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sosmm")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const EMPTY_LINE: &str = r#"{
  "set": {"kind": "ball", "d": 1, "r": 1},
  "g_list": [{"basis": "monomial", "terms": [{"exp": [0], "coef": -2.0}, {"exp": [1], "coef": 1.0}]}]
}"#;

const COS: &str = r#"{
  "set": {"kind": "trig", "d": 1, "r": 2, "s": 4},
  "g": {"basis": "trig", "terms": [{"freq": [1], "cos": 1.0, "sin": 0.0}, {"freq": [2], "cos": 0.5, "sin": 0.3}]}
}"#;

#[test]
fn certify_writes_a_small_residual() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.json", EMPTY_LINE);
    let out = dir.path().join("out");
    let o = sosmm(&out, &["certify", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json_file(&out.join("result.json"));
    assert_eq!(r["status"], "Certificate");
    assert!(r["residual"].as_f64().unwrap() <= 1e-10);
    assert!(r["min_eigenvalue"].as_f64().unwrap() > 0.0);
}

#[test]
fn validate_accepts_a_good_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.json", COS);
    let o = sosmm(&dir.path().join("out"), &["validate", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["valid"], true);
}

#[test]
fn validate_lists_representability_and_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"set": {"kind": "trig", "d": 1, "r": 2}, "g": {"basis": "trig", "terms": [{"freq": [5], "cos": 1, "sin": 0}]}}"#, "representability"),
        (r#"{"set": {"kind": "trig", "d": 1, "r": 2}}"#, "schema"),
    ];
    for (i, (body, kind)) in cases.iter().enumerate() {
        let input = write(dir.path(), &format!("p{i}.json"), body);
        let o = sosmm(&dir.path().join(format!("out{i}")), &["validate", input.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1));
        let r: Value = serde_json::from_slice(&o.stderr).unwrap();
        assert_eq!(r["valid"], false);
        let errors = r["errors"].as_array().unwrap();
        assert!(errors.iter().any(|e| e.as_str().unwrap().starts_with(kind)), "{errors:?}");
    }
}

#[test]
fn bad_schema_exits_one_with_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.json", r#"{"set": {"kind": "trig", "d": 1, "r": 2}, "bogus": 1}"#);
    let out = dir.path().join("out");
    let o = sosmm(&out, &["solve-min", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let r: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(r["error"]["kind"], "schema");
    assert!(out.join("error.json").exists());
    assert!(!out.join("result.json").exists());
}

#[test]
fn run_dispatches_on_the_file_command() {
    let dir = tempfile::tempdir().unwrap();
    let body = COS.replacen('{', r#"{"command": "solve-min","#, 1);
    let input = write(dir.path(), "p.json", &body);
    let out = dir.path().join("out");
    let o = sosmm(&out, &["run", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = json_file(&out.join("result.json"));
    assert_eq!(r["command"], "solve-min");
    assert!(r["oracle"]["relaxation_minus_oracle"].as_f64().unwrap().abs() < 1e-6);
}

#[test]
fn csv_format_prints_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.json", COS);
    let out = dir.path().join("out");
    let o = sosmm(&out, &["--format", "csv", "solve-min", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.split(',').count() >= 2, "{header}");
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|l| l.split(',').count() == header.split(',').count()));
}

#[test]
fn repro_fig2_is_tight_against_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = sosmm(&out, &["repro", "fig2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json_file(&out.join("result.json"));
    assert_eq!(r["bound_status"], "Tight");
    let v = r["value"].as_f64().unwrap();
    let oracle = r["oracle"]["value"].as_f64().unwrap();
    assert!((v - oracle).abs() <= 1e-5, "{v} vs {oracle}");
    assert!(out.join("fig2.csv").exists());
    assert!(out.join("problem.json").exists());
}
