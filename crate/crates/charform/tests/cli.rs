//! End-to-end tests of the command-line binary: exit codes, output shapes,
//! JSON schema, file inputs, and determinism.

use std::process::{Command, Output};

fn charform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_charform"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn char_reports_witness_with_exit_zero() {
    let out = charform(&["char", "--fragment", "S", "--alphabet", "a,b", "<a>tt"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("characteristic"), "{text}");
    assert!(text.contains("witness a.0"), "{text}");
}

#[test]
fn metrics_matches_the_calibration_example() {
    let out = charform(&["metrics", "<a>(<a>tt & <b>tt) & <b>(<a>tt & <b>tt)"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "size 13\ndecl 2\neqlen 5\nmd 2\n");
}

#[test]
fn preorder_failure_exits_one() {
    let out = charform(&["preorder", "--kind", "TS", "a.0", "b.0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout(&out), "false\n");
    let out = charform(&["preorder", "--kind", "S", "a.0", "a.0 + b.0"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn parse_errors_exit_two() {
    let out = charform(&["sat", "<a>tt &"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    // `0` without an explicit alphabet is a hard error.
    let out = charform(&["sat", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = charform(&["sat", "0", "--alphabet", "a"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn budget_exhaustion_exits_three() {
    let out = charform(&["oracle", "count", "--alphabet", "a,b", "--depth", "6", "--width", "4"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn json_reports_have_the_stable_schema() {
    let out = charform(&["prime", "--fragment", "S", "--json", "<a>tt | <b>tt"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["query"], "prime");
    assert_eq!(v["holds"], false);
    assert_eq!(v["confidence"], "exact");
    assert!(v["time_ms"].is_number());

    let out = charform(&["char", "--fragment", "RS", "--alphabet", "a,b", "--json", "<a>0 & [b]ff"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["holds"], true);
    assert_eq!(v["witness"], "a.0");
}

#[test]
fn synth_emits_declarative_and_explicit_forms() {
    let out = charform(&["synth", "--kind", "RS", "--alphabet", "a b", "a.0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "alphabet a b\nroot X0\nX0 = <a>X1 & [b]ff\nX1 = [a]ff & [b]ff\n"
    );
    let out = charform(&["synth", "--kind", "RS", "--alphabet", "a b", "a.0", "--form", "explicit"]);
    assert_eq!(stdout(&out), "<a>([a]ff & [b]ff) & [b]ff\n");
}

#[test]
fn file_arguments_are_read() {
    let dir = std::env::temp_dir();
    let fpath = dir.join("charform_cli_test_formula.txt");
    let ppath = dir.join("charform_cli_test_process.txt");
    std::fs::write(&fpath, "<a><b>tt\n").unwrap();
    std::fs::write(&ppath, "states 3\nroot 0\n0 a 1\n1 b 2\n").unwrap();
    let out = charform(&["mc", ppath.to_str().unwrap(), fpath.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "true\n");
}

#[test]
fn gen_is_deterministic_and_bench_runs() {
    let args = ["gen", "--fragment", "RS", "--alphabet", "a,b", "--seed", "9", "--count", "5"];
    let first = charform(&args);
    let second = charform(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(stdout(&first), stdout(&second));
    assert_eq!(stdout(&first).lines().count(), 5);

    let out = charform(&[
        "bench", "--fragment", "S", "--alphabet", "a,b", "--count", "20", "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["count"], 20);
}

#[test]
fn dnf_and_kernel_and_oracle_queries() {
    let out = charform(&["dnf", "(<a>tt | <b>tt) & <a>tt"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("disjuncts 2\n"), "{}", stdout(&out));

    let out = charform(&["kernel", "--kind", "S", "a.0 + a.0", "a.0"]);
    assert_eq!(out.status.code(), Some(0));

    let out = charform(&["oracle", "sat", "<a>tt & [a]ff"]);
    assert_eq!(out.status.code(), Some(1));

    let out = charform(&["oracle", "char", "--kind", "S", "--alphabet", "a,b", "<a>tt"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("a.0"), "{}", stdout(&out));
}
