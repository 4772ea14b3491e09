use std::process::Command;

use serde_json::Value;

fn lopcut(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_lopcut")).args(args).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), json, String::from_utf8(out.stderr).unwrap())
}

#[test]
fn fence_cuts_round_trip_through_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lopcut")).args(["cuts", "--fence", "3"]).output().unwrap();
    assert!(out.status.success());
    let path = dir.path().join("cuts.json");
    std::fs::write(&path, &out.stdout).unwrap();

    let (code, v, _) = lopcut(&["verify", "--cut", path.to_str().unwrap(), "--n", "6"]);
    assert_eq!(code, 0);
    assert_eq!(v["valid"], true);
    assert_eq!(v["mode"], "exhaustive");
    assert_eq!(v["tight_count"], 18);
    assert_eq!(v["facet_dim"], 14);
    assert_eq!(v["is_facet"], true);
}

#[test]
fn invalid_cut_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.json");
    // x_12 + x_13 + x_23 <= 0 fails at the identity ordering
    std::fs::write(&path, r#"{"n": 3, "coeffs": [1, 1, 1], "terms": [], "lower": null, "rhs": "0", "origin": "fence"}"#).unwrap();
    let (code, v, err) = lopcut(&["verify", "--cut", path.to_str().unwrap(), "--n", "3"]);
    assert_eq!(code, 2, "{err}");
    assert_eq!(v["valid"], false);
}

#[test]
fn two_element_instance_is_optimal_at_once() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("two.txt");
    std::fs::write(&path, "2\n0 3\n7 0\n").unwrap();
    let (code, v, _) = lopcut(&["solve", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["status"], "Optimal");
    assert_eq!(v["iterations"].as_array().unwrap().len(), 1);
    assert_eq!(v["incumbent"]["value"], 7);
}

#[test]
fn analyze_output_feeds_cuts() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lopcut")).args(["analyze", "--fence", "3"]).output().unwrap();
    assert!(out.status.success());
    let path = dir.path().join("vertex.json");
    std::fs::write(&path, &out.stdout).unwrap();
    let (code, v, err) = lopcut(&["cuts", "--from-vertex", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(v["cuts"].as_array().unwrap().len(), 1);
}

#[test]
fn bad_input_reports_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "3\n0 1 2\n0 x 1\n").unwrap();
    let (code, _, err) = lopcut(&["solve", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 3"), "{err}");
    assert_eq!(lopcut(&["frobnicate"]).0, 1);
}
