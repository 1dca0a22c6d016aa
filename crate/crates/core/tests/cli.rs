//! End-to-end tests of the `boxcount` binary and its exit-code taxonomy.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_boxcount"))
}

fn write(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SYSTEM_28: &str = r#"{"kind":"diophantine","payload":{"rows":2,"cols":2,"matrix":[[1,2],[2,3]],"offsets":[0,0],"relations":["eq","eq"]}}"#;

#[test]
fn count_eval_flow() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.json", SYSTEM_28);
    let artifact = dir.path().join("f.json");
    let st = bin()
        .args(["count", "--input"])
        .arg(&problem)
        .arg("--output")
        .arg(&artifact)
        .status()
        .unwrap();
    assert!(st.success());

    for (point, expect) in [("2,3", "1"), ("1,1", "0"), ("0,0", "1"), ("8,13", "1")] {
        let out = bin()
            .args(["eval", "--input"])
            .arg(&artifact)
            .args(["--point", point])
            .output()
            .unwrap();
        assert!(out.status.success(), "eval at {point}: {}", stderr_of(&out));
        assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), expect, "at {point}");
    }
}

#[test]
fn count_writes_deterministic_output() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.json", SYSTEM_28);
    let run = || {
        let out = bin()
            .args(["count", "--input"])
            .arg(&problem)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn zero_column_is_a_construction_error() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(
        dir.path(),
        "p.json",
        r#"{"kind":"diophantine","payload":{"rows":1,"cols":2,"matrix":[[1,0]],"offsets":[0],"relations":["eq"]}}"#,
    );
    let out = bin().args(["count", "--input"]).arg(&problem).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("zero column"), "{}", stderr_of(&out));
}

#[test]
fn non_pointed_matrix_is_a_construction_error() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(
        dir.path(),
        "p.json",
        r#"{"kind":"dm","payload":{"t":1,"n":2,"matrix":[[1,-1]]}}"#,
    );
    let out = bin().args(["count", "--input"]).arg(&problem).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_of(&out);
    assert!(err.contains("not pointed"), "{err}");
    assert!(err.contains("kernel vector"), "{err}");
}

#[test]
fn malformed_input_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.json", "{not json");
    let out = bin().args(["count", "--input"]).arg(&problem).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["count", "--input"])
        .arg(dir.path().join("missing.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.json", SYSTEM_28);
    let artifact = dir.path().join("f.json");
    assert!(bin()
        .args(["count", "--input"])
        .arg(&problem)
        .arg("--output")
        .arg(&artifact)
        .status()
        .unwrap()
        .success());
    // negative point on an N-domain artifact: outside the domain
    let out = bin()
        .args(["eval", "--input"])
        .arg(&artifact)
        .args(["--point", "-1,2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    // wrong arity: an input error
    let out = bin()
        .args(["eval", "--input"])
        .arg(&artifact)
        .args(["--point", "1,2,3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn z_domain_artifact_allows_negative_points() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(
        dir.path(),
        "p.json",
        r#"{"kind":"dm","payload":{"t":2,"n":3,"matrix":[[1,0,1],[0,1,1]]}}"#,
    );
    let artifact = dir.path().join("c.json");
    assert!(bin()
        .args(["count", "--input"])
        .arg(&problem)
        .arg("--output")
        .arg(&artifact)
        .status()
        .unwrap()
        .success());
    let out = bin()
        .args(["eval", "--input"])
        .arg(&artifact)
        .args(["--point", "2,-1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0");
    let out = bin()
        .args(["eval", "--input"])
        .arg(&artifact)
        .args(["--point", "3,5"])
        .output()
        .unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "4");
}

#[test]
fn verify_is_deterministic_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.json", SYSTEM_28);
    let run = |jobs: &str| {
        let out = bin()
            .args(["verify", "--input"])
            .arg(&problem)
            .args(["--bound", "12", "--jobs", jobs])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr_of(&out));
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    let report: serde_json::Value = serde_json::from_slice(&one).unwrap();
    assert_eq!(report["checked_points"], 169);
    assert!(report["mismatches"].as_array().unwrap().is_empty());
}

#[test]
fn verify_growth_problem() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(
        dir.path(),
        "p.json",
        r#"{"kind":"growth","payload":{"set":{"dim":1,"lattice":"Z","pieces":[{"offset":[0],"generators":[]},{"offset":[1],"generators":[[1]]},{"offset":[-1],"generators":[[-1]]}]},"spec":{"t1":0,"t2":1}}}"#,
    );
    let out = bin()
        .args(["verify", "--input"])
        .arg(&problem)
        .args(["--bound", "15"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["checked_points"], 16);
    assert!(report["mismatches"].as_array().unwrap().is_empty());
}

#[test]
fn show_renders_regions() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.json", SYSTEM_28);
    let artifact = dir.path().join("f.json");
    assert!(bin()
        .args(["count", "--input"])
        .arg(&problem)
        .arg("--output")
        .arg(&artifact)
        .status()
        .unwrap()
        .success());
    let out = bin().args(["show", "--input"]).arg(&artifact).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("n1"), "{text}");
    assert!(text.contains("n2"), "{text}");
}
