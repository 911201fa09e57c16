use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hadfrac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hadfrac"))
        .args(args)
        .env_remove("HADFRAC_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn value(o: &Output) -> f64 {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    json(o)["value"].as_f64().expect("numeric value")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

const X: &str = "2.71828182845";

#[test]
fn eval_constant_alpha_one_is_log_x() {
    let o = hadfrac(&[
        "eval",
        "--op",
        "hadamard-left",
        "--alpha",
        "1",
        "--beta",
        "1",
        "--x",
        X,
        "--fn",
        "const:1",
    ]);
    let x: f64 = X.parse().unwrap();
    // truncated e: the exact value is ln x, about 3.3e-12 below 1
    assert!(rel(value(&o), x.ln()) < 1e-14);
    assert!((value(&o) - 1.0).abs() < 1e-11);
    let doc = json(&o);
    assert!(doc["err_est"].as_f64().unwrap() <= 1e-12);
    assert!(doc["n_used"].as_u64().unwrap() > 0);
}

#[test]
fn eval_constant_half_order() {
    let o = hadfrac(&[
        "eval",
        "--op",
        "hadamard-left",
        "--alpha",
        "0.5",
        "--beta",
        "1",
        "--x",
        X,
        "--fn",
        "const:1",
    ]);
    let x: f64 = X.parse().unwrap();
    // (ln x)^{1/2} / Γ(3/2)
    let expected = x.ln().sqrt() / (std::f64::consts::PI.sqrt() / 2.0);
    assert!(rel(value(&o), expected) < 1e-12, "{} vs {expected}", value(&o));
    assert!((value(&o) - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-6);
}

#[test]
fn eval_closed_form() {
    let o = hadfrac(&[
        "eval",
        "--op",
        "closed-form",
        "--alpha",
        "1",
        "--beta",
        "0.5",
        "--lambda",
        "2",
        "--x",
        X,
    ]);
    let x: f64 = X.parse().unwrap();
    // Γ(2) / (0.5 Γ(3)) · x^{-1} (ln x)^2
    let expected = x.ln().powi(2) / x;
    assert!(rel(value(&o), expected) < 1e-14);
    assert!((value(&o) - 0.367879).abs() < 1e-6);
}

#[test]
fn eval_power_input_matches_closed_form() {
    let q = hadfrac(&[
        "eval",
        "--op",
        "hadamard-left",
        "--alpha",
        "0.7",
        "--beta",
        "0.4",
        "--fn",
        "power:1.5",
    ]);
    let c = hadfrac(&[
        "eval",
        "--op",
        "closed-form",
        "--alpha",
        "0.7",
        "--beta",
        "0.4",
        "--lambda",
        "1.5",
    ]);
    assert!(rel(value(&q), value(&c)) < 1e-13);
    assert_eq!(json(&q)["converged"], Value::Bool(true));
}

#[test]
fn eval_right_and_rl_operators() {
    // constant input, beta = 1: right Hadamard gives ln(b/x), RL gives powers of the length
    let r = hadfrac(&[
        "eval",
        "--op",
        "hadamard-right",
        "--alpha",
        "1",
        "--x",
        "2",
        "--b",
        "5",
        "--fn",
        "const:1",
    ]);
    assert!(rel(value(&r), (2.5f64).ln()) < 1e-13);
    let l = hadfrac(&["eval", "--op", "rl-left", "--alpha", "2", "--x", "3", "--fn", "const:1"]);
    assert!(rel(value(&l), 2.0) < 1e-13);
    let rr = hadfrac(&[
        "eval", "--op", "rl-right", "--alpha", "2", "--x", "2", "--b", "5", "--fn", "const:1",
    ]);
    assert!(rel(value(&rr), 4.5) < 1e-13);
}

#[test]
fn eval_classical_agrees_with_beta_one() {
    let f = r#"{"kind":"spline-exponential","knots":[0,0.4,1.1,2],"logvals":[0.2,-0.5,0.3,0.1]}"#;
    let a = hadfrac(&["eval", "--op", "classical", "--alpha", "0.6", "--x", "5", "--fn", f]);
    let b = hadfrac(&[
        "eval",
        "--op",
        "hadamard-left",
        "--alpha",
        "0.6",
        "--beta",
        "1",
        "--x",
        "5",
        "--fn",
        f,
    ]);
    assert!(rel(value(&a), value(&b)) < 1e-10);
}

#[test]
fn eval_reads_function_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.json");
    fs::write(
        &path,
        r#"{"kind":"spline-exponential","knots":[0,1,2],"logvals":[0,0.5,0.2]}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let a = hadfrac(&[
        "eval",
        "--op",
        "hadamard-left",
        "--alpha",
        "1.3",
        "--beta",
        "0.5",
        "--fn",
        &format!("spline:{p}"),
    ]);
    let b = hadfrac(&[
        "eval",
        "--op",
        "hadamard-left",
        "--alpha",
        "1.3",
        "--beta",
        "0.5",
        "--fn",
        p,
    ]);
    assert_eq!(value(&a), value(&b));
}

#[test]
fn eval_exit_codes() {
    let bad_fn = hadfrac(&["eval", "--op", "hadamard-left", "--alpha", "1", "--fn", "const:abc"]);
    assert_eq!(code(&bad_fn), 2);
    let bad_const = hadfrac(&["eval", "--op", "hadamard-left", "--alpha", "1", "--fn", "const:-1"]);
    assert_eq!(code(&bad_const), 2);
    let bad_alpha = hadfrac(&["eval", "--op", "hadamard-left", "--alpha", "0", "--fn", "const:1"]);
    assert_eq!(code(&bad_alpha), 2);
    let missing = hadfrac(&[
        "eval",
        "--op",
        "hadamard-left",
        "--alpha",
        "1",
        "--fn",
        "spline:/no/such/file.json",
    ]);
    assert_eq!(code(&missing), 2);
    let no_fn = hadfrac(&["eval", "--op", "hadamard-left", "--alpha", "1"]);
    assert_eq!(code(&no_fn), 2);
    let unknown_flag = hadfrac(&["eval", "--op", "nope", "--alpha", "1"]);
    assert_eq!(code(&unknown_flag), 2);
    let below = hadfrac(&[
        "eval",
        "--op",
        "hadamard-left",
        "--alpha",
        "1",
        "--x",
        "0.5",
        "--fn",
        "const:1",
    ]);
    assert_eq!(code(&below), 3);
    let spline = r#"{"kind":"spline-exponential","knots":[0,1],"logvals":[0,1]}"#;
    let beyond = hadfrac(&[
        "eval",
        "--op",
        "hadamard-left",
        "--alpha",
        "1",
        "--x",
        "5",
        "--fn",
        spline,
    ]);
    assert_eq!(code(&beyond), 3);
    let closed_at_one = hadfrac(&[
        "eval",
        "--op",
        "closed-form",
        "--alpha",
        "1",
        "--lambda",
        "1",
        "--x",
        "1",
    ]);
    assert_eq!(code(&closed_at_one), 3);
}

#[test]
fn identity_passes_and_corrupted_gamma_fails() {
    let ok = hadfrac(&["identity", "--semigroup-trials", "10", "--reduction-trials", "10"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let doc = json(&ok);
    assert_eq!(doc["passed"], Value::Bool(true));
    assert_eq!(doc["checks"].as_array().unwrap().len(), 108 + 10 + 20);

    let bad = hadfrac(&[
        "identity",
        "--semigroup-trials",
        "2",
        "--reduction-trials",
        "2",
        "--corrupt-gamma",
        "1e-3",
    ]);
    assert_eq!(code(&bad), 1);
    assert_eq!(json(&bad)["passed"], Value::Bool(false));
}

#[test]
fn identity_text_lists_every_check() {
    let o = hadfrac(&[
        "identity",
        "--semigroup-trials",
        "3",
        "--reduction-trials",
        "3",
        "--format",
        "text",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("ok")).count(), 108 + 3 + 6);
}

fn run_suite(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["suite", "--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    hadfrac(&args)
}

#[test]
fn suite_is_deterministic_and_thread_independent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = run_suite(a.path(), &["--trials", "10", "--seed", "42", "--threads", "1"]);
    let ob = run_suite(b.path(), &["--trials", "10", "--seed", "42", "--threads", "3"]);
    assert_eq!(code(&oa), 0, "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(code(&ob), 0);
    let ca = fs::read(a.path().join("suite.csv")).unwrap();
    assert_eq!(ca, fs::read(b.path().join("suite.csv")).unwrap());
    let header = String::from_utf8_lossy(&ca).lines().next().unwrap().to_owned();
    assert_eq!(
        header,
        "theorem_id,alpha,beta,alpha2,beta2,p,q,gamma,delta,m,M,x,lhs,rhs,margin,verdict,seed,trial_index,err_budget"
    );
    assert_eq!(String::from_utf8_lossy(&ca).lines().count(), 1 + 10 * 10);
    assert!(!a.path().join("suite.json").exists());
}

#[test]
fn suite_respects_thread_env() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hadfrac"))
        .args([
            "suite",
            "--trials",
            "2",
            "--theorem",
            "T3_2",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ])
        .env("HADFRAC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn suite_json_replays() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_suite(
        dir.path(),
        &["--trials", "8", "--format", "both", "--theorem", "T3_1,T4_4"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = dir.path().join("suite.json");
    let r = report.to_str().unwrap();
    let doc: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let recorded = doc["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["theorem_id"] == "T4_4" && r["trial_index"] == 7)
        .unwrap()
        .clone();
    assert!(recorded["functions"].is_object());

    let out = hadfrac(&["replay", r, "--trial", "7", "--theorem", "T4_4"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&out);
    assert_eq!(rep["matches"], Value::Bool(true));
    assert_eq!(rep["regenerated_identical"], Value::Bool(true));
    let (lhs, rec) = (rep["lhs"].as_f64().unwrap(), recorded["lhs"].as_f64().unwrap());
    assert!(rel(lhs, rec) <= 1e-12);
    let (rhs, rec) = (rep["rhs"].as_f64().unwrap(), recorded["rhs"].as_f64().unwrap());
    assert!(rel(rhs, rec) <= 1e-12);

    // ambiguous trial index without --theorem
    assert_eq!(code(&hadfrac(&["replay", r, "--trial", "7"])), 2);
    assert_eq!(code(&hadfrac(&["replay", r, "--trial", "99", "--theorem", "T3_1"])), 2);
    // the CSV has no embedded functions
    let csv = dir.path().join("suite.csv");
    assert_eq!(code(&hadfrac(&["replay", csv.to_str().unwrap(), "--trial", "1"])), 2);
    assert_eq!(code(&hadfrac(&["replay", "/no/such/report.json", "--trial", "1"])), 2);
}

#[test]
fn tampered_report_fails_replay() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_suite(dir.path(), &["--trials", "3", "--format", "json", "--theorem", "T3_2"]);
    assert_eq!(code(&o), 0);
    let path = dir.path().join("suite.json");
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let lhs = doc["reports"][0]["lhs"].as_f64().unwrap();
    doc["reports"][0]["lhs"] = Value::from(lhs * (1.0 + 1e-9));
    let idx = doc["reports"][0]["trial_index"].as_u64().unwrap().to_string();
    fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = hadfrac(&["replay", path.to_str().unwrap(), "--trial", &idx]);
    assert_eq!(code(&out), 1);
}

#[test]
fn census_only_suite_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_suite(dir.path(), &["--trials", "20", "--theorem", "T4_4"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("T4_4") && text.contains("census"));
}

#[test]
fn suite_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_suite(dir.path(), &["--trials", "0"])), 2);
    assert_eq!(code(&run_suite(dir.path(), &["--alphas", "0.3,-1"])), 2);
    assert_eq!(code(&run_suite(dir.path(), &["--theorem", "T9_9"])), 2);
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, "{not json").unwrap();
    assert_eq!(code(&run_suite(dir.path(), &["--config", cfg.to_str().unwrap()])), 2);
}
