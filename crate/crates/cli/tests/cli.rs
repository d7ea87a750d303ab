// SPDX-License-Identifier: Apache-2.0

use std::process::{Command, Output};

use indecomp::classify::ClassificationReport;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_indecomp"));
    c.env_remove("INDECOMP_CACHE_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn indecomp")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}): {}\nstderr: {}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
    })
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("structured error on stderr")
}

#[test]
fn classify_d2_classical() {
    let o = run(&["classify", "--d", "2", "--mode", "classical", "--json", "-"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["report"]["classes"].as_array().unwrap().len(), 1);
    assert_eq!(v["report"]["partial"], false);
    let m = &v["manifest"];
    assert_eq!(m["command"], "classify");
    assert_eq!(m["constants"]["dominance_c"], "17/4");
    assert_eq!(m["constants"]["gamma2"], "4/(2*sqrt(6)-3)");
    assert_eq!(m["engine_version"], indecomp::VERSION);
}

#[test]
fn report_round_trips() {
    let o = run(&["classify", "--d", "3", "--mode", "classical", "--json", "-"]);
    let v = stdout_json(&o);
    let text = v["report"].to_string();
    let r = ClassificationReport::from_json(&text).unwrap();
    assert_eq!(r.classes.len(), 3);
    let again: Value = serde_json::to_value(&r).unwrap();
    assert_eq!(again, v["report"]);
}

#[test]
fn runs_are_byte_identical_outside_the_manifest() {
    let args = ["classify", "--d", "5", "--mode", "nonclassical", "--json", "-"];
    let a = stdout_json(&run(&args));
    let b = stdout_json(&run(&args));
    assert_eq!(a["report"].to_string(), b["report"].to_string());
    let strip = |mut v: Value| {
        v["manifest"]["wall_time_ms"] = Value::Null;
        v
    };
    assert_eq!(strip(a), strip(b));
}

#[test]
fn non_square_free_is_invalid() {
    let o = run(&["classify", "--d", "4", "--mode", "classical"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["code"], "NotSquareFree");
    assert!(o.stdout.is_empty());
}

#[test]
fn usage_errors_are_structured() {
    let o = run(&["classify", "--d", "2", "--mode", "sideways"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["code"], "Usage");
    let o = run(&["check-form", "--d", "2", "--form", "1|1|", "--mode", "classical"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["code"], "Parse");
    let o = run(&["check-form", "--d", "2", "--form", "1|1|1", "--mode", "classical"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["code"], "NotClassical");
}

#[test]
fn timeout_then_resume() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("partial.json");
    let out_s = out.to_str().unwrap();
    let o = run(&["classify", "--d", "21", "--mode", "nonclassical", "--timeout", "0.000001", "--json", out_s]);
    assert_eq!(o.status.code(), Some(3));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["report"]["partial"], true);
    assert_eq!(v["manifest"]["partial"], true);
    assert!(v["report"]["resume"].is_object());
    let o = run(&["classify", "--d", "21", "--mode", "nonclassical", "--resume", out_s, "--json", "-"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["report"]["partial"], false);
    assert_eq!(v["report"]["classes"].as_array().unwrap().len(), 8);
}

#[test]
fn resume_for_other_parameters_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("partial.json");
    let out_s = out.to_str().unwrap();
    let o = run(&["census", "--d", "6", "--mode", "classical", "--timeout", "0.000001", "--json", out_s]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["census", "--d", "6", "--mode", "nonclassical", "--resume", out_s]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["code"], "ResumeMismatch");
}

#[test]
fn cache_dir_holds_state_between_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cached = |args: &[&str]| bin().env("INDECOMP_CACHE_DIR", dir.path()).args(args).output().unwrap();
    let o = cached(&["census", "--d", "3", "--mode", "nonclassical", "--timeout", "0.000001"]);
    assert_eq!(o.status.code(), Some(3));
    let state = dir.path().join("census-d3-nonclassical.json");
    assert!(state.exists());
    let o = cached(&["census", "--d", "3", "--mode", "nonclassical", "--json", "-"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["report"]["classes"].as_array().unwrap().len(), 21);
    assert!(!state.exists());
}

#[test]
fn text_table_groups_by_determinant() {
    let o = run(&["classify", "--d", "3", "--mode", "classical"]);
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8(o.stdout).unwrap();
    let dets: Vec<&str> = s.lines().filter(|l| l.starts_with("det ")).collect();
    assert_eq!(dets, ["det 1  N = 1", "det 3  N = 9", "det 10+5*sqrt(3)  N = 25"]);
}

#[test]
fn check_form_with_witness() {
    let o = run(&["check-form", "--d", "5", "--form", "2|2|3+sqrt(5)", "--mode", "classical", "--witness"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["report"]["indecomposable"], true);
    assert!(v["report"].get("witness").is_none());

    let o = run(&["check-form", "--d", "5", "--form", "2|0|2", "--mode", "classical", "--witness"]);
    let v = stdout_json(&o);
    assert_eq!(v["report"]["indecomposable"], false);
    assert_eq!(v["report"]["witness"]["parts"].as_array().unwrap().len(), 2);
}

#[test]
fn equivalent_and_enum_min() {
    let o = run(&["equivalent", "--d", "2", "--a", "1|0|1", "--b", "1|2|2"]);
    let v = stdout_json(&o);
    assert_eq!(v["report"]["equivalent"], true);
    assert!(v["report"]["witness"]["v1"].is_array());
    let o = run(&["equivalent", "--d", "5", "--a", "1|1|1", "--b", "2|2|3+sqrt(5)"]);
    assert_eq!(stdout_json(&o)["report"]["equivalent"], false);

    let o = run(&["enum-min", "--d", "2", "--form", "2+sqrt(2)|2|2-sqrt(2)"]);
    assert_eq!(stdout_json(&o)["report"]["min_norm"], "2");
}

#[test]
fn context_and_indecomposables() {
    let o = run(&["context", "--d", "21", "--json"]);
    let v = stdout_json(&o);
    assert_eq!(v["report"]["dominance_c"], "7");
    assert_eq!(v["report"]["gamma2"], "16/3");
    let o = run(&["indecomposables", "--d", "2", "--json"]);
    let v = stdout_json(&o);
    assert_eq!(v["report"].as_array().unwrap().len(), 2);
    let o = run(&["context", "--d", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn universal_bounds_d5() {
    let o = run(&["universal-bounds", "--d", "5", "--n", "2", "--mode", "classical"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let bounds = v["report"]["bounds"].as_array().unwrap();
    let value = |k: &str| bounds.iter().find(|b| b["kind"] == k).map(|b| b["value"].as_str().unwrap().to_string());
    assert_eq!(value("upper-refined").as_deref(), Some("7"));
    assert_eq!(value("upper-census").as_deref(), Some("7"));
    assert_eq!(v["report"]["inputs"]["g"]["source"], "Sasaki");
}

#[test]
fn universal_bounds_lower_family() {
    // Q(sqrt(10)): delta for the m = 3 family
    let o = run(&["universal-bounds", "--d", "10", "--mode", "classical", "--delta", "(10-3*sqrt(10))/20", "--g", "7", "--lower-only"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let notes = v["report"]["notes"].as_array().unwrap();
    let count: u64 = notes[0].as_str().unwrap().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(count >= 67);
    assert_eq!(v["report"]["inputs"]["g"]["source"], "user");
    let o = run(&["universal-bounds", "--d", "10", "--mode", "classical", "--delta", "1/3", "--lower-only"]);
    assert_eq!(stderr_json(&o)["error"]["code"], "NotCodifferent");
}

#[test]
fn family_and_fixed_det() {
    let o = run(&["family", "--m", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert!(v["report"]["members"].as_array().unwrap().len() >= 6);
    let o = run(&["family", "--m", "4"]);
    assert_eq!(stderr_json(&o)["error"]["code"], "NotOdd");

    let o = run(&["fixed-det-demo", "--n", "3"]);
    assert_eq!(stdout_json(&o)["report"]["det"], 26);
    let o = run(&["fixed-det-demo", "--n", "4"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"]["code"], "BudgetExceeded");
}

#[test]
fn jobs_flag_sets_pool_size() {
    let o = run(&["--jobs", "2", "check-form", "--d", "2", "--form", "1|0|1", "--mode", "classical"]);
    assert_eq!(stdout_json(&o)["manifest"]["jobs"], 2);
}
