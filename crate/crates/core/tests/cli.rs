use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use feedback_consensus::synth::demo_workspace;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_feedback-consensus")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shots_and_classify_succeed_on_the_demo() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = demo_workspace(dir.path()).unwrap();
    let out = dir.path().join("out");
    let o = bin(&["shots", "--manifest", s(&manifest), "--out-dir", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("shots").is_dir());
    let o = bin(&["classify", "--manifest", s(&manifest), "--out-dir", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = bin(&["evaluate", "--manifest", s(&manifest), "--out-dir", s(&out)]);
    assert_eq!(code(&o), 0);
    assert!(out.join("reports/demo-classify.md").is_file());
}

#[test]
fn run_then_report_on_the_demo() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = demo_workspace(dir.path()).unwrap();
    let out = dir.path().join("out");
    let o = bin(&["run", "--manifest", s(&manifest), "--out-dir", s(&out), "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let md = fs::read_to_string(out.join("reports/demo.md")).unwrap();
    fs::remove_file(out.join("reports/demo.md")).unwrap();
    let o = bin(&["report", "--manifest", s(&manifest), "--out-dir", s(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(out.join("reports/demo.md")).unwrap(), md);
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&bin(&["frobnicate"])), 1);
    assert_eq!(code(&bin(&["ingest", "--manifest", s(&dir.path().join("nope.toml"))])), 1);

    let manifest = demo_workspace(dir.path()).unwrap();
    let text = fs::read_to_string(&manifest).unwrap().replace("mapping = \"DS4\"", "mapping = \"DS42\"");
    fs::write(&manifest, text).unwrap();
    let out = dir.path().join("out");
    let o = bin(&["classify", "--manifest", s(&manifest), "--out-dir", s(&out)]);
    assert_eq!(code(&o), 1);
    assert!(!out.join("predictions").exists());
    assert!(!out.join("cache").exists());
}

#[test]
fn runtime_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    demo_workspace(dir.path()).unwrap();
    let manifest = dir.path().join("live.toml");
    fs::write(
        &manifest,
        r#"run_id = "live"
seed = 1

[[datasets]]
id = "DS3"
path = "data/ds3.csv"
mapping = "DS3"

[[endpoints]]
model_id = "remote"
base_url = "http://127.0.0.1:9"
auth_env_var = "FEEDBACK_CONSENSUS_TEST_UNSET_KEY"
"#,
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_feedback-consensus"))
        .args(["classify", "--manifest", s(&manifest), "--out-dir", s(&dir.path().join("out"))])
        .env_remove("FEEDBACK_CONSENSUS_TEST_UNSET_KEY")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}
