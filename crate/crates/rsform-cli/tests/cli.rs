use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rsform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsform")).args(args).output().expect("binary runs")
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rsform-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("report is JSON")
}

#[test]
fn log_of_a_time_one_map() {
    let doc = scratch("field.txt", "dim 2\norder 6\nfield X:\n  x^2\n  x*y\n");
    let exp = rsform(&["exp", path(&doc)]);
    assert!(exp.status.success());
    let report = json(&exp);
    assert_eq!(report["command"], "exp");
    assert!(report["result"].is_object());
}

#[test]
fn syntax_errors_exit_with_two() {
    let doc = scratch("bad.txt", "dim 2\norder 6\nfield X:\n  x^2 +\n  x*y\n");
    let out = rsform(&["log", path(&doc)]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains(":4:"), "{msg}");
}

#[test]
fn failed_preconditions_exit_with_three() {
    let doc = scratch("fixed.txt", "dim 2\norder 8\ndiffeo F:\n  x + x*y\n  y + y^2\ncurve G:\n  s\n  0\n");
    let out = rsform(&["reduce", path(&doc)]);
    assert_eq!(out.status.code(), Some(3));
    let report = json(&out);
    assert_eq!(report["error"]["exit_code"], 3);
    assert_eq!(report["error"]["code"], "precondition");
}

#[test]
fn tampered_certificates_fail_verification() {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join("companion.txt");
    let out = rsform(&["turrittin", path(&data)]);
    assert!(out.status.success());
    let mut report = json(&out);
    report["result"]["system"]["rank"] = serde_json::json!(7);
    let cert = scratch("tampered.json", &report.to_string());
    let verify = rsform(&["verify", path(&data), "--cert", path(&cert)]);
    assert_eq!(verify.status.code(), Some(5));
    assert_eq!(json(&verify)["error"]["code"], "cli.verify");
}
