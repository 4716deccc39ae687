use std::path::Path;
use std::process::{Command, Output};

fn kit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reimann-kit"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

#[test]
fn empty_selection_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"fields": []}"#).unwrap();
    let out = kit(
        &["report", "inequalities", "--config", "cfg.json", "--out", "rep"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("rep/inequalities.csv")).unwrap();
    assert_eq!(csv, "field,metric,value,probe_hash\n");
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"feilds": ["rot"]}"#).unwrap();
    let out = kit(
        &["report", "cutoff", "--config", "cfg.json", "--out", "rep"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(
        kit(&["diffops", "--field", "nope", "--point", "0,0"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn violations_exit_one_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"fields": ["rot"], "points": 4, "envelopes": {"qbar/abs_d": [0.0, 1.5]}}"#,
    )
    .unwrap();
    let out = kit(
        &["report", "equivalence", "--config", "cfg.json", "--out", "rep"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rot"));
}

#[test]
fn biot_savart_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(kit(
        &["biot-savart", "--vorticity", "disk", "--grid", "64", "--out", "v.json"],
        dir.path()
    )
    .status
    .success());
    let out = kit(
        &["diffops", "--field", "rot", "--point", "0.5,0.25", "--step", "0"],
        dir.path(),
    );
    let bundle: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(bundle["curl_scalar"], serde_json::json!(2.0));
    assert!(dir.path().join("v.json").exists());
}
