//! End-to-end tests of the command-line interface.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dsforge"))
}

fn stdout_of(args: &[&str]) -> String {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "dsforge {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

#[test]
fn construct_matches_hand_unrolled_skeleton() {
    let out = stdout_of(&["construct", "--kind", "t_rho", "--rho", "2", "--i", "2", "--j", "1"]);
    assert_eq!(out.trim(), "(1) (2) <2 1> <2 1>");
}

#[test]
fn construct_check_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("host.txt");
    let seq = stdout_of(&["construct", "--kind", "u_s", "--s", "4", "--i", "2", "--j", "2"]);
    std::fs::write(&path, &seq) .unwrap();
    let p = path.to_str().unwrap();

    // The construction avoids five alternations but contains four.
    let no = stdout_of(&["check", "--pattern", "alt:6", "--in", p]);
    assert_eq!(no.trim(), "NO");
    let yes = stdout_of(&["check", "--pattern", "alt:5", "--in", p]);
    assert!(yes.starts_with("YES "), "unexpected: {yes}");
    let witness: serde_json::Value = serde_json::from_str(yes.trim_start_matches("YES ").trim()).unwrap();
    assert!(witness["positions"].as_array().unwrap().len() == 5);
    assert!(witness["symbol_map"].is_object());
}

#[test]
fn check_reports_absent_zigzag() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tpi.txt");
    let seq = stdout_of(&["construct", "--kind", "t_pi", "--pi", "uudu", "--i", "2", "--j", "3"]);
    std::fs::write(&path, &seq).unwrap();
    let out = stdout_of(&["check", "--pattern", "M:2", "--in", path.to_str().unwrap()]);
    assert_eq!(out.trim(), "NO");
}

#[test]
fn guard_refusal_exits_three_with_estimate() {
    let out = bin()
        .args(["construct", "--kind", "t_rho", "--rho", "2", "--i", "8", "--j", "8"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("size guard"), "stderr: {err}");
    assert!(err.contains("predicted"), "stderr: {err}");
}

#[test]
fn usage_errors_exit_two() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["check", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ex_emits_json_verdict() {
    let out = stdout_of(&["ex", "--pattern", "1 2 1 2", "--n", "3"]);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["max"], 5);
    assert_eq!(v["exact"], true);
    assert!(v["witness"].is_string());

    let out = stdout_of(&["ex", "--pattern", "1 2 1 2", "--n", "3", "--m", "4"]);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["max"], 8);
}

#[test]
fn alpha_and_ack_fixtures() {
    assert_eq!(stdout_of(&["alpha", "--n", "8", "--m", "8"]).trim(), "1");
    assert_eq!(stdout_of(&["alpha", "--n", "9", "--m", "9"]).trim(), "2");
    assert_eq!(stdout_of(&["ack", "--i", "1", "--j", "20"]).trim(), "1048576");
    assert_eq!(stdout_of(&["ack", "--i", "4", "--j", "1"]).trim(), "2");
}

#[test]
fn tree_writes_dot_output() {
    let dir = tempfile::tempdir().unwrap();
    let host = dir.path().join("host.txt");
    std::fs::write(&host, "(1 2) (2 1) (1 2) (2 1)").unwrap();
    let dot_path = dir.path().join("out.dot");
    stdout_of(&[
        "tree",
        "--in",
        host.to_str().unwrap(),
        "--dot",
        dot_path.to_str().unwrap(),
    ]);
    let dot = std::fs::read_to_string(&dot_path).unwrap();
    assert!(dot.starts_with("digraph"));

    let proj = stdout_of(&["tree", "--in", host.to_str().unwrap(), "--project", "1"]);
    assert!(proj.contains("wing"));
}

#[test]
fn verify_quick_reports_and_passes() {
    let out = bin().args(["verify", "--quick", "--seed", "7"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["mode"], "quick");
    assert_eq!(json["seed"], 7);
    let claims = json["claims"].as_array().unwrap();
    assert!(claims.len() >= 12);
    assert!(claims.iter().all(|c| c["status"] != "fail"));
    let table = String::from_utf8_lossy(&out.stderr);
    assert!(table.contains("claim"), "table missing: {table}");
}
