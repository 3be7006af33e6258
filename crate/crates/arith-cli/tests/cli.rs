use std::process::{Command, Output};

use serde_json::Value;

fn arith(args: &[&str], jobs: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_arith"));
    c.args(args);
    match jobs {
        Some(j) => c.env("ARITH_JOBS", j),
        None => c.env_remove("ARITH_JOBS"),
    };
    c.output().expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = arith(&all, Some("2"));
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    });
    (out.status.code().unwrap(), v)
}

fn summary(v: &Value, key: &str) -> u64 {
    v["summary"][key].as_u64().unwrap()
}

#[test]
fn eval_q_sweep() {
    let (code, v) = json(&["eval-q", "--k", "1", "--N", "1..50", "--t", "1"]);
    assert_eq!(code, 0);
    assert_eq!(summary(&v, "records"), 50);
    assert_eq!(summary(&v, "failures"), 0);
    let r = &v["records"][3];
    assert_eq!(r["inputs"]["N"], 4);
    assert!((r["value"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    for key in ["inputs", "value", "oracle", "diff", "error_estimate", "terms", "guards", "ms"] {
        assert!(r.get(key).is_some(), "record lacks {key}");
    }
}

#[test]
fn eval_q_general_power() {
    let (code, v) = json(&["eval-q", "--k", "2", "--s", "2", "--N", "32"]);
    assert_eq!(code, 0);
    assert_eq!(summary(&v, "records"), 1);
    assert_eq!(v["records"][0]["oracle"].as_f64(), Some(1.0));
    assert!((v["records"][0]["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["eval-q", "--k", "1", "--N", "0"][..],
        &["eval-q", "--N", "5..1"],
        &["eval-q", "--N", "3", "--t", "0"],
        &["eval-q", "--N", "3", "--tol", "-1"],
        &["sum", "--kind", "squares", "--N", "5", "--weight", "nosuch"],
        &["sum", "--kind", "squares", "--N", "5", "--weight", "reciprocal", "--method", "closed"],
        &["rh", "--from", "1", "--to", "5"],
        &["verify", "--suite", "nosuch"],
        &["frobnicate"],
    ] {
        assert_eq!(arith(args, None).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(arith(&["sigma", "--N", "6"], Some("0")).status.code(), Some(2));
    assert_eq!(arith(&["sigma", "--N", "6"], Some("many")).status.code(), Some(2));
}

#[test]
fn verification_failure_exits_1() {
    // too few terms for the G series: the record carries the error
    let (code, v) = json(&["eval-q", "--N", "5", "--max-terms", "10"]);
    assert_eq!(code, 1);
    assert_eq!(summary(&v, "failures"), 1);
    assert!(v["records"][0]["error"].as_str().unwrap().contains("converge"));
}

#[test]
fn sum_examples() {
    let (code, v) = json(&["sum", "--kind", "squares", "--d", "1", "--k", "1", "--N", "1..60", "--weight", "unit"]);
    assert_eq!(code, 0);
    assert_eq!(summary(&v, "failures"), 0);

    let (code, v) = json(&["sum", "--kind", "difference", "--d", "2", "--k", "1", "--N", "1", "--weight", "unit"]);
    assert_eq!(code, 0);
    let r = &v["records"][0];
    let tail = r["oracle_tail"].as_f64().unwrap();
    assert!(tail > 0.0 && tail < 1e-15);
    assert_eq!(r["inputs"]["b_horizon"], 100_000);

    let (code, v) = json(&["sum", "--kind", "divisor-pairs", "--N", "6", "--weight", "unit"]);
    assert_eq!(code, 0);
    let want = 1.0 / 7f64.powi(4) + 1.0 / 5f64.powi(4);
    assert!((v["records"][0]["value"].as_f64().unwrap() - want).abs() < 1e-8);

    let (code, v) = json(&["sum", "--kind", "squares", "--d", "1..2", "--k", "2", "--N", "3..12", "--weight", "reciprocal"]);
    assert_eq!(code, 0);
    assert_eq!(summary(&v, "records"), 20);
}

#[test]
fn sigma_and_rh() {
    let (code, v) = json(&["sigma", "--N", "2..100", "--t", "1"]);
    assert_eq!(code, 0);
    assert_eq!(summary(&v, "failures"), 0);

    let (code, v) = json(&["rh", "--from", "2", "--to", "200", "--mode", "analytic"]);
    assert_eq!(code, 0);
    assert!(v["summary"]["min_margin"].as_f64().unwrap() > 0.0);

    let (code, v) = json(&["rh", "--from", "2", "--to", "5040", "--mode", "exact"]);
    assert_eq!(code, 0);
    assert_eq!(summary(&v, "records"), 5039);
    let r = &v["records"][10];
    assert_eq!(r["inputs"]["N"], 12);
    assert_eq!(r["extras"]["sigma_exact"].as_f64(), Some(28.0));
}

#[test]
fn t_sweep_is_first_class() {
    let (code, v) = json(&["eval-q", "--N", "25", "--t", "0.8,1.0,1.5"]);
    assert_eq!(code, 0);
    let vals: Vec<f64> = (0..3).map(|i| v["records"][i]["value"].as_f64().unwrap()).collect();
    assert!(vals.iter().all(|x| (x - 1.0).abs() < 1e-7), "{vals:?}");
}

#[test]
fn verify_suites() {
    let (code, v) = json(&["verify", "--suite", "kernels"]);
    assert_eq!(code, 0);
    assert!(v["summary"]["suite_max_residual"]["kernels"].as_f64().unwrap() < 1e-9);

    let (code, v) = json(&["verify", "--suite", "all", "--tol", "1e-6"]);
    assert_eq!(code, 0);
    assert_eq!(v["summary"]["suite_max_residual"].as_object().unwrap().len(), 6);
}

#[test]
fn csv_has_header_and_quoting() {
    let out = arith(&["verify", "--suite", "integrals", "--format", "csv"], Some("1"));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("suite,check,value,oracle,diff,error_estimate,oracle_tail,tolerance,terms,guards,ms,failed,error\n"));
    // labels such as "q in [-10, 10]" contain commas and must be quoted
    assert!(text.contains("\"I closed form vs quadrature, q in [-10, 10], t=1\""));
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let width = rd.headers().unwrap().len();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.len() == width));
}

#[test]
fn reports_are_deterministic() {
    let args = ["eval-q", "--k", "1,2", "--N", "1..30", "--no-timing", "--format", "json"];
    let a = arith(&args, Some("1"));
    let b = arith(&args, Some("1"));
    assert_eq!(a.stdout, b.stdout);
    // the worker count only shows in the config block
    let c = arith(&args, Some("3"));
    let strip = |o: &Output| {
        let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v["config"]["jobs"] = Value::Null;
        v
    };
    assert_eq!(strip(&a), strip(&c));
}

#[test]
fn json_numbers_carry_17_digits() {
    let out = arith(&["sigma", "--N", "6", "--format", "json", "--no-timing"], Some("1"));
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.trim_start().starts_with("\"oracle\":")).unwrap();
    let digits: String = line.split(':').nth(1).unwrap().trim().trim_end_matches(',').split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(digits.len(), 17, "{line}");
}

#[test]
fn text_report_ends_with_summary() {
    let out = arith(&["sigma", "--N", "6..8"], Some("1"));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "failures: 0"));
    assert!(text.lines().next().unwrap().starts_with("N=6 t=1"));
}
