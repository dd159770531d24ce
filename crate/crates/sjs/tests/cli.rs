//! End-to-end tests against the built binary: exit codes, JSON output,
//! and the graph/run/fuzz subcommands.

use std::path::PathBuf;
use std::process::{Command, Output};

fn sjs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sjs"))
        .args(args)
        .output()
        .expect("run sjs binary")
}

fn write_temp(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sjs-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const FIG1_FULL: &str = "\
var v1 = { d : 1,
      m : function (x) { this.a = x + this.d }};
var v2 = { a : 2 } proto v1;
v2.m(3);
v2.m(\"foo\");
var v3 = { b : 4 } proto v2;
v3.m(4);
";

const FIG1_VALID: &str = "\
var v1 = { d : 1,
      m : function (x) { this.a = x + this.d }};
var v2 = { a : 2 } proto v1;
v2.m(3);
";

#[test]
fn check_exit_codes() {
    let ok = write_temp("ok.sjs", FIG1_VALID);
    let out = sjs(&["check", ok.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    let bad = write_temp("bad.sjs", FIG1_FULL);
    let out = sjs(&["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("error["), "{stdout}");

    // two diagnostics, printed in source order
    let errors: Vec<&str> = stdout.lines().filter(|l| l.contains("error[")).collect();
    assert_eq!(errors.len(), 2, "{stdout}");
    assert!(errors[0].contains(":5:"), "{stdout}");
    assert!(errors[1].contains(":7:"), "{stdout}");

    let parse_err = write_temp("parse.sjs", "var = 1");
    let out = sjs(&["check", parse_err.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    // missing file is an environment error, not a type error
    let out = sjs(&["check", "/nonexistent/missing.sjs"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_multiple_files_aggregates() {
    let ok = write_temp("multi-ok.sjs", "1 + 1");
    let bad = write_temp("multi-bad.sjs", "({a: 3} proto {}).b");
    let out = sjs(&["check", ok.to_str().unwrap(), bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("multi-ok.sjs: ok"), "{stdout}");
    assert!(stdout.contains("LowerBoundViolation"), "{stdout}");
}

#[test]
fn check_verify_flag_and_env() {
    let ok = write_temp("verify.sjs", FIG1_VALID);
    let out = sjs(&["check", "--verify", ok.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_sjs"))
        .args(["check", ok.to_str().unwrap()])
        .env("SJS_DEBUG_VERIFY", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn infer_json_is_schema_stable() {
    let ok = write_temp("infer.sjs", FIG1_VALID);
    let out = sjs(&["infer", "--json", ok.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let parsed: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("valid JSON output");
    let bindings = parsed.as_array().expect("array of bindings");
    assert_eq!(bindings.len(), 2);
    for b in bindings {
        assert!(b.get("name").is_some());
        assert!(b.get("type").is_some());
        assert!(b.get("span").is_some());
    }
    assert_eq!(bindings[0]["name"], "v1");
    assert!(bindings[0]["type"].as_str().unwrap().contains("^P("));

    // a program without bindings gives an empty list
    let none = write_temp("infer-none.sjs", "1 + 2");
    let out = sjs(&["infer", "--json", none.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed.as_array().unwrap().len(), 0);
}

#[test]
fn infer_reports_diagnostics_with_exit_1() {
    let bad = write_temp("infer-bad.sjs", "({a: 3} proto {}).b");
    let out = sjs(&["infer", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_json_diagnostics() {
    let bad = write_temp("check-json.sjs", "({a: 3} proto {}).b");
    let out = sjs(&["check", "--json", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed["ok"], false);
    let diags = parsed["diagnostics"].as_array().unwrap();
    assert!(!diags.is_empty());
    assert_eq!(diags[0]["kind"], "LowerBoundViolation");
    assert!(diags[0]["span"]["line"].is_number());
    assert!(diags[0]["message"].is_string());
}

#[test]
fn graph_pre_is_subset_of_post() {
    let src = write_temp("graph.sjs", FIG1_VALID);
    let pre = sjs(&["graph", src.to_str().unwrap()]);
    assert_eq!(pre.status.code(), Some(0));
    let post = sjs(&["graph", "--post", src.to_str().unwrap()]);
    assert_eq!(post.status.code(), Some(0));
    let pre_edges: std::collections::BTreeSet<&str> = std::str::from_utf8(&pre.stdout)
        .unwrap()
        .lines()
        .collect();
    let post_edges: std::collections::BTreeSet<&str> = std::str::from_utf8(&post.stdout)
        .unwrap()
        .lines()
        .collect();
    assert!(!pre_edges.is_empty());
    assert!(
        pre_edges.is_subset(&post_edges),
        "propagation must only add edges"
    );
    assert!(post_edges.len() > pre_edges.len());

    // the trace stream prints one line per bound insertion
    let traced = sjs(&["graph", "--post", "--trace", src.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&traced.stdout);
    assert!(
        stdout.lines().any(|l| l.starts_with("trace: ") && l.contains("rule")),
        "{stdout}"
    );
}

#[test]
fn graph_dot_output() {
    let src = write_temp("graph-dot.sjs", "var v1 = {}; { a : 2 } proto v1;");
    let out = sjs(&["graph", "--dot", src.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let dot = String::from_utf8_lossy(&out.stdout);
    assert!(dot.starts_with("digraph"));
    // the out-of-thin-air minus edge is labeled with the removed fields
    assert!(dot.contains("\\\\{a}"), "{dot}");
}

#[test]
fn run_prints_value_and_trace() {
    let src = write_temp("run.sjs", FIG1_VALID);
    let out = sjs(&["run", src.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("value: 4"), "{stdout}");

    let out = sjs(&["run", "--trace", src.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("step: SS-MCall"), "{stdout}");

    let nul = write_temp("null.sjs", "null.a");
    let out = sjs(&["run", nul.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("runtime error"), "{stdout}");

    let loops = write_temp("loop.sjs", "var f = function (x) { f(x) }; f(1)");
    let out = sjs(&["run", "--max-steps", "100", loops.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("timeout"), "{stdout}");
}

#[test]
fn fuzz_clean_and_injected() {
    let out = sjs(&["fuzz", "--seed", "7", "--rounds", "300", "--budget", "25"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("0 violations"), "{stdout}");

    let dir = std::env::temp_dir().join(format!("sjs-fuzz-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = sjs(&[
        "fuzz",
        "--rounds",
        "3000",
        "--budget",
        "30",
        "--inject-bug",
        "xi",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("reproducer:"), "{stdout}");
    // the reproducer is a parseable .sjs file
    let repro = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(Result::ok)
        .find(|e| e.path().extension().is_some_and(|x| x == "sjs"))
        .expect("a reproducer file");
    let text = std::fs::read_to_string(repro.path()).unwrap();
    sjs::surface::parse(&sjs::surface::SourceProgram::new(text, "repro.sjs"))
        .expect("reproducer parses");
}
