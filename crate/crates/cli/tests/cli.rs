//! End-to-end behavior of the `cocyclelab` binary: exit codes, artifacts,
//! atomicity, determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cocyclelab"))
}

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().args(args).current_dir(dir).output().expect("binary runs")
}

#[test]
fn fixtures_table_lists_reference_experiments() {
    let out = bin().arg("fixtures").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("sl2z-uniform-walk"));
    assert!(text.contains("diag-p075"));
    assert!(text.contains("f2-martingale"));
    assert!(text.contains("lambda_1 = 0.5"));
}

#[test]
fn fixtures_write_dumps_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["fixtures", "--write"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("sl2z-uniform-walk.json").exists());
    // dumped configs parse back
    let text = fs::read_to_string(tmp.path().join("diag-2-half.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["experiment"], "spectrum");
}

#[test]
fn spectrum_run_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["spectrum", "--config", &fixture("diag-2-half"), "--out", "."],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["classification"], "simple");
    let lam1 = summary["exponents"][0].as_f64().unwrap();
    assert!((lam1 - 2.0f64.ln()).abs() < 1e-12);
    let csv = fs::read_to_string(tmp.path().join("samples.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "member,lambda_1,lambda_2");
    assert_eq!(csv.lines().count(), 5); // header + 4 members
}

#[test]
fn malformed_config_exits_2_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let out = run_in(
        tmp.path(),
        &["spectrum", "--config", bad.to_str().unwrap(), "--out", "artifacts"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("artifacts").join("summary.json").exists());
    assert!(!tmp.path().join("artifacts").join("samples.csv").exists());
}

#[test]
fn invalid_probabilities_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"experiment":"spectrum",
            "system":{"kind":"bernoulli","alphabet":["a"],"probs":[0.7],"seed":1},
            "cocycle":{"d":2,"table":{"a":[[1.0,0.0],[0.0,1.0]]}},
            "n":500,"ensemble":4,"seed":1}"#,
    )
    .unwrap();
    let out = run_in(tmp.path(), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("probabilities"), "stderr: {err}");
}

#[test]
fn wrong_subcommand_for_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["induce", "--config", &fixture("diag-2-half")],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rotation_flags_request_exits_3_with_gap_context() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["flags", "--config", &fixture("rotation-flags"), "--out", "artifacts"],
    );
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("insufficient singular value gap"), "stderr: {err}");
    // designed failure writes no partial artifacts
    assert!(!tmp.path().join("artifacts").join("summary.json").exists());
}

#[test]
fn seed_override_changes_results_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture("rotation");
    let run = |dir: &str, seed: &str| {
        let out = run_in(
            tmp.path(),
            &["spectrum", "--config", &cfg, "--seed", seed, "--out", dir],
        );
        assert!(out.status.success());
        fs::read(tmp.path().join(dir).join("samples.csv")).unwrap()
    };
    let a1 = run("a1", "123");
    let a2 = run("a2", "123");
    let b = run("b", "321");
    assert_eq!(a1, a2);
    assert_ne!(a1, b);
}

#[test]
fn jobs_flag_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("small.json");
    fs::write(
        &cfg_path,
        r#"{"experiment":"spectrum",
            "system":{"kind":"bernoulli","alphabet":["u","d"],"probs":[0.5,0.5],"seed":50},
            "cocycle":{"d":2,"table":{
                "u":[[2.718281828459045,0.0],[0.0,0.36787944117144233]],
                "d":[[0.36787944117144233,0.0],[0.0,2.718281828459045]]}},
            "n":20000,"ensemble":8,"seed":50}"#,
    )
    .unwrap();
    let cfg = cfg_path.to_str().unwrap().to_string();
    let mut contents = Vec::new();
    for (dir, jobs) in [("j1", "1"), ("j2", "2"), ("j4", "4")] {
        let out = run_in(
            tmp.path(),
            &[
                "spectrum", "--config", &cfg, "--seed", "9", "--jobs", jobs, "--out", dir,
            ],
        );
        assert!(out.status.success());
        contents.push((
            fs::read(tmp.path().join(dir).join("summary.json")).unwrap(),
            fs::read(tmp.path().join(dir).join("samples.csv")).unwrap(),
        ));
    }
    assert_eq!(contents[0], contents[1]);
    assert_eq!(contents[1], contents[2]);
}

#[test]
fn boundary_run_produces_curve_sections() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("b.json");
    fs::write(
        &cfg,
        r#"{"experiment":"boundary","k":2,"count":300,"n":120,"seed":5,
            "stability":30,"cylinders":["a","ab"],
            "martingale":{"cylinder":"a","eps":0.05,"grid":[20,60,120]}}"#,
    )
    .unwrap();
    let out = run_in(
        tmp.path(),
        &["boundary", "--config", cfg.to_str().unwrap(), "--out", "."],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("samples.csv")).unwrap();
    assert!(csv.lines().next().unwrap() == "section,label,x,value,stderr");
    assert!(csv.contains("harmonic,a,"));
    assert!(csv.contains("martingale,a,"));
}
