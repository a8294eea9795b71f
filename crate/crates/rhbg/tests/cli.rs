//! Black-box tests of the compiled binary: every subcommand, exit codes,
//! and the interactive mode through a pipe.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rhbg"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn scratch(name: &str, content: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rhbg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn solve_enumerate_fig1() {
    let out = bin()
        .args([
            "solve",
            fixture("fig1.json").to_str().unwrap(),
            "--method",
            "enumerate",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("vleft = 7/10 (0.7)"), "{text}");
    assert!(text.contains("vright = 3/10"), "{text}");
    assert!(text.contains("method: enumerate, residual: 0"), "{text}");
}

#[test]
fn solve_iterate_close_to_exact() {
    let out = bin()
        .args([
            "solve",
            fixture("fig1.json").to_str().unwrap(),
            "--method",
            "iterate",
            "--tol",
            "1e-12",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let line = text.lines().find(|l| l.starts_with("vleft")).unwrap();
    let decimal: f64 = line
        .split('(')
        .nth(1)
        .unwrap()
        .trim_end_matches(')')
        .parse()
        .unwrap();
    assert!((decimal - 0.7).abs() < 1e-9, "{line}");
}

#[test]
fn solve_cross_check_agrees() {
    let out = bin()
        .args([
            "solve",
            fixture("fig5.json").to_str().unwrap(),
            "--cross-check",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("cross-check: OK"), "{}", stdout(&out));
}

#[test]
fn check_holds_and_fails() {
    let holds = scratch(
        "t_third.json",
        r#"{"values":{"v0":"1/3","v1":"1/2","v2":"1","v3":"0"}}"#,
    );
    let out = bin()
        .args([
            "check",
            fixture("fig5.json").to_str().unwrap(),
            "--candidate",
            holds.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("average property: HOLDS"));

    let fails = scratch(
        "t_bad.json",
        r#"{"values":{"v0":"1/3","v1":"2/5","v2":"1","v3":"0"}}"#,
    );
    let out = bin()
        .args([
            "check",
            fixture("fig5.json").to_str().unwrap(),
            "--candidate",
            fails.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("average property: FAILS"));
}

#[test]
fn check_rejects_malformed_candidate() {
    let missing = scratch("t_missing.json", r#"{"values":{"v0":"1/3"}}"#);
    let out = bin()
        .args([
            "check",
            fixture("fig5.json").to_str().unwrap(),
            "--candidate",
            missing.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn classify_fig6_weak() {
    let out = bin()
        .args(["classify", fixture("fig6.json").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("v0: threshold 5/18"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("v0:") && l.ends_with("Weak")), "{text}");
}

#[test]
fn simulate_losing_play() {
    let out = bin()
        .args([
            "simulate",
            fixture("fig1.json").to_str().unwrap(),
            "--vertex",
            "vleft",
            "--budget",
            "3/5",
            "--p2",
            "eps:1/1000",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("P2Wins at v2 after 3 rounds"), "{text}");
    assert!(text.contains("0.2385"), "{text}");
}

#[test]
fn simulate_scripted_json_trace() {
    let script = scratch(
        "p1_script.json",
        r#"{"actions":[{"bid":"1/4","move":"vright"},{"bid":"1/2","move":"v1"}]}"#,
    );
    let quarter = scratch(
        "fig1_quarter.json",
        &std::fs::read_to_string(fixture("fig1.json"))
            .unwrap()
            .replace("1/8", "1/4"),
    );
    let json_out = scratch("trace.json", "");
    let out = bin()
        .args([
            "simulate",
            quarter.to_str().unwrap(),
            "--vertex",
            "vleft",
            "--budget",
            "1",
            "--p1",
            &format!("script:{}", script.display()),
            "--json",
            json_out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("P1Wins at v1 after 2 rounds"), "{}", stdout(&out));
    let trace: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
    assert_eq!(trace["terminal"], "P1Wins");
    assert_eq!(trace["final_budget1"], "0");
    assert_eq!(trace["steps"].as_array().unwrap().len(), 2);
}

#[test]
fn play_piped_win_as_p1() {
    let quarter = scratch(
        "fig1_quarter_play.json",
        &std::fs::read_to_string(fixture("fig1.json"))
            .unwrap()
            .replace("1/8", "1/4"),
    );
    let mut child = bin()
        .args([
            "play",
            quarter.to_str().unwrap(),
            "--as",
            "p1",
            "--vertex",
            "vleft",
            "--budget",
            "1",
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"1/4 vright\n1/2 v1\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("you win"), "{text}");
    assert!(text.contains("your budget 3/4"), "{text}");
}

#[test]
fn play_bad_input_forfeits_after_three_tries() {
    let mut child = bin()
        .args([
            "play",
            fixture("fig1.json").to_str().unwrap(),
            "--as",
            "p1",
            "--vertex",
            "vleft",
            "--budget",
            "3/5",
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"nonsense\n2 vright\nalso bad\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("forfeit"), "{text}");
    assert!(text.contains("you lose"), "{text}");
}

#[test]
fn sweep_writes_csv() {
    let out_file = scratch("sweep.csv", "");
    let out = bin()
        .args([
            "sweep",
            fixture("fig1.json").to_str().unwrap(),
            "--vertex",
            "vleft",
            "--grid",
            "0,1/8,1/4",
            "--out",
            out_file.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out_file).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lambda,lambda_decimal,threshold,threshold_decimal,residual,method,note"
    );
    assert_eq!(lines.next().unwrap(), "0,0,2/3,0.6666666666666666,0,enumerate,");
    assert!(csv.contains("1/8,0.125,7/10,0.7,0,enumerate,"), "{csv}");
    assert!(csv.contains("1/4,0.25,1,1,0,enumerate,"), "{csv}");
}

#[test]
fn sweep_range_grid_to_stdout() {
    let out = bin()
        .args([
            "sweep",
            fixture("fig1.json").to_str().unwrap(),
            "--vertex",
            "vleft",
            "--grid",
            "range:0:1/4:2",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn export_lp_stdout() {
    let out = bin()
        .args(["export-lp", fixture("fig5.json").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("Maximize\n obj: f_v0 + f_v1 + f_v2 + f_v3"), "{text}");
    assert!(text.contains("Subject To"));
    assert!(text.contains("Binary"));
    assert!(text.trim_end().ends_with("End"));
}

#[test]
fn exit_codes() {
    // Unknown subcommand and unreadable file are usage errors.
    let out = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["solve", "/no/such/file.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    // Cyclic graph with the DAG method: rejected input, not a crash.
    let out = bin()
        .args([
            "solve",
            fixture("fig1.json").to_str().unwrap(),
            "--method",
            "dag",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn threads_env_is_accepted() {
    let out = bin()
        .env("RHBG_THREADS", "2")
        .args([
            "sweep",
            fixture("fig1.json").to_str().unwrap(),
            "--vertex",
            "vleft",
            "--grid",
            "1/8,1/5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("8/11"));
}
