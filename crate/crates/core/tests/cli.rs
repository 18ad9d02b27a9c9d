use std::process::{Command, Output};

use serde_json::Value;
use sifting_limits::output::OutputRecord;

const GAMMA: f64 = 0.5772156649015329;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sifting-limits"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (Value, OutputRecord) {
    let mut full = args.to_vec();
    full.extend(["--format", "json", "--no-timing"]);
    let out = run(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let value: Value = serde_json::from_str(&text).unwrap();
    let schema: Value =
        serde_json::from_str(include_str!("../schema/output.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    assert!(validator.is_valid(&value), "schema rejects {text}");
    let record = OutputRecord::from_json(&text).unwrap();
    assert_eq!(record.to_json().unwrap().trim_end(), text.trim_end());
    (value, record)
}

fn row(value: &Value) -> &Value {
    &value["rows"][0]
}

#[test]
fn eval_initial_segment() {
    let (v, _) = json(&["eval", "j", "--kappa", "2", "--u", "0.9", "--oracle"]);
    let got = row(&v)["value"].as_f64().unwrap();
    assert!((got - (-2.0 * GAMMA).exp() / 2.0 * 0.81).abs() < 1e-15);
    assert!(row(&v)["oracle_delta"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn eval_derivative_at_first_row() {
    let (v, _) = json(&["eval", "jprime", "--kappa", "2", "--u", "1.7581"]);
    assert!(row(&v)["value"].as_f64().unwrap() > 0.0);
    assert!(row(&v)["bound"].as_f64().unwrap() <= 1e-20);
}

#[test]
fn eval_below_support() {
    let (v, _) = json(&["eval", "j", "--kappa", "2", "--u", "-1"]);
    assert_eq!(row(&v)["value"].as_f64(), Some(0.0));
    assert_eq!(row(&v)["bound"].as_f64(), Some(0.0));
}

#[test]
fn eval_main_term() {
    let (v, _) = json(&["eval", "main-term", "--kappa", "3", "--u", "2.7601", "--a", "0.262761"]);
    let i = row(&v)["value"].as_f64().unwrap();
    assert!((i - 5.4e-6).abs() < 5.4e-7, "{i}");
    let (opt, _) = json(&["eval", "main-term", "--kappa", "3", "--u", "2.7601"]);
    assert!(row(&opt)["value"].as_f64().unwrap() >= i);
}

#[test]
fn eval_outside_coverage_is_a_domain_error() {
    let out = run(&["eval", "j", "--kappa", "2", "--u", "9"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["eval", "main-term", "--kappa", "2", "--u", "1.5", "--a", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn table_csv_layout() {
    let out = run(&["table2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kappa,u,a,I,err,beta");
    assert_eq!(lines.len(), 10);
    let listed = [4.516, 6.520, 8.522, 10.523, 12.524, 14.524, 16.524, 18.525, 20.525];
    for (line, beta) in lines[1..].iter().zip(listed) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[3] > 0.0);
        assert!((f[5] - beta).abs() < 0.005, "{line}");
        assert_eq!(f[5], 2.0 * f[1] + 1.0);
    }
}

#[test]
fn table_single_row() {
    let (v, rec) = json(&["table2", "--kappa", "5"]);
    assert_eq!(rec.rows.len(), 1);
    let r = row(&v);
    assert_eq!(r["kappa"].as_u64(), Some(5));
    assert!((r["optimized"]["u"].as_f64().unwrap() - 4.7617).abs() < 2.5e-3);
    assert!((r["optimized"]["a"].as_f64().unwrap() - 0.258785).abs() < 1e-3);
    assert!(r["published"]["I"].as_f64().unwrap() > r["published"]["err"].as_f64().unwrap());
}

#[test]
fn find_beta_default_tolerance() {
    let (v, _) = json(&["find-beta", "--kappa", "4"]);
    let beta = row(&v)["beta"].as_f64().unwrap();
    assert!((beta - 8.522).abs() < 0.005);
}

#[test]
fn find_beta_tight_tolerance() {
    let (v, _) = json(&["find-beta", "--kappa", "7", "--u-tol", "1e-4"]);
    let r = row(&v);
    assert!(r["beta"].as_f64().unwrap() <= 14.524 + 0.001 + 1e-12);
    assert!(r["I"].as_f64().unwrap() > r["err"].as_f64().unwrap());
}

#[test]
fn unsupported_kappa_is_a_usage_error() {
    let out = run(&["find-beta", "--kappa", "11"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn coarse_truncation_has_no_crossing() {
    let out = run(&["find-beta", "--kappa", "10", "--truncation", "12"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn published_row_failure_exits_four() {
    let out = run(&["table2", "--kappa", "10", "--truncation", "58", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("kappa,u,a,I,err,beta"));
}

#[test]
fn output_is_deterministic() {
    let args = ["table2", "--kappa", "3", "--format", "json", "--no-timing"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let text = ["find-beta", "--kappa", "2", "--no-timing"];
    assert_eq!(run(&text).stdout, run(&text).stdout);
}

#[test]
fn timing_is_reported_unless_suppressed() {
    let out = run(&["find-beta", "--kappa", "2", "--format", "json"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["timing_ms"].as_f64().unwrap() >= 0.0);
    let text = String::from_utf8(run(&["find-beta", "--kappa", "2"]).stdout).unwrap();
    assert!(text.contains("time:"));
}

#[test]
fn text_output_has_six_digits() {
    let out = run(&["eval", "jprime", "--kappa", "2", "--u", "0.5", "--no-timing"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("value=0.157618"), "{text}");
}
