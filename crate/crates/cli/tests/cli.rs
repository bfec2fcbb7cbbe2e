use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardy-blowup")).args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("hardy-blowup-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn regime_existence_verdict() {
    let out = run(&["regime", "--mu", "0", "--p", "3", "--s", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    assert_eq!(v["verdict"], "Existence");
    assert_eq!(v["threshold_s"], 2.0);
}

#[test]
fn regime_above_quarter_has_no_superharmonics() {
    let v = json_stdout(&run(&["regime", "--mu", "0.3", "--p", "2", "--s", "0"]));
    assert_eq!(v["verdict"], "NoSuperharmonics");
}

#[test]
fn negative_mu_parses() {
    let v = json_stdout(&run(&["regime", "--mu", "-0.75", "--p", "2", "--s", "1"]));
    assert_eq!(v["threshold_s"], 1.5);
}

#[test]
fn domain_error_exits_one_with_json_on_stderr() {
    let out = run(&["regime", "--mu", "0", "--p", "1", "--s", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "InvalidParams");
    assert!(out.stdout.is_empty());
}

#[test]
fn malformed_flags_exit_64() {
    assert_eq!(run(&["regime", "--mu", "zero"]).status.code(), Some(64));
    assert_eq!(run(&["regime", "--mu", "0", "--p", "3"]).status.code(), Some(64));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn barrier_verify_exit_codes() {
    let ok = run(&["barrier", "verify", "--named", "small-super", "--mu", "0"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json_stdout(&ok)["holds"], true);
    // delta^{1.1} lies outside [beta_-, beta_+] = [0, 1]: sub-harmonic, not super.
    let bad = run(&["barrier", "verify", "--pure-power", "1.1", "--mu", "0"]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(json_stdout(&bad)["rho0"], 0.0);
}

#[test]
fn barrier_eval_csv_has_full_precision() {
    let out = run(&["barrier", "eval", "--pure-power", "0.5", "--mu", "0", "--deltas", "0.25", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("delta,value,residual,scale,sign_holds"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "2.5000000000000000e-1");
    assert_eq!(row[1], "5.0000000000000000e-1");
}

#[test]
fn ko_amplitude_for_the_cubic_slab() {
    let v = json_stdout(&run(&["barrier", "ko", "--mu", "0", "--p", "3", "--s", "0"]));
    assert!(v["gamma"].as_f64().unwrap() >= 2f64.sqrt() - 1e-12);
}

#[test]
fn shoot_critical_case_blows_up() {
    let v = json_stdout(&run(&["shoot", "--mu", "0", "--p", "3", "--s", "2", "--kappa", "1"]));
    assert_eq!(v["terminal"]["kind"], "BlowUp");
    assert!(v["R_kappa"].as_f64().unwrap() > 0.0);
    assert!(v["error_estimate"].as_f64().unwrap() < 1e-3);
}

#[test]
fn shoot_subcritical_reaches_r_min() {
    let v = json_stdout(&run(&["shoot", "--mu", "0", "--p", "3", "--s", "1", "--kappa", "1"]));
    assert_eq!(v["terminal"]["kind"], "ReachedRMin");
    assert!(v["R_kappa"].is_null());
}

#[test]
fn sweep_csv_rows() {
    let out = run(&["sweep", "--mu", "0", "--p", "3", "--s", "2", "--kappas", "1,0.5,0.3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let radii: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(radii.len(), 3);
    assert!(radii.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn solve_pair_in_nonexistence_regime_is_a_regime_error() {
    let out = run(&["solve", "--mu", "0", "--p", "3", "--s", "2", "--mode", "pair"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "RegimeError");
}

#[test]
fn solve_then_classify_round_trip() {
    let path = scratch("limit.csv");
    let out = run(&["solve", "--mu", "0", "--p", "3", "--s", "0", "--mode", "exhaust", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&run(&[
        "classify", "--mu", "0", "--p", "3", "--s", "0", "--input", path.to_str().unwrap(), "--window", "1e-4,1e-2",
    ]));
    assert_eq!(v["class"]["verdict"], "XXL");
    assert!((v["fit"]["amplitude"].as_f64().unwrap() / 2f64.sqrt() - 1.0).abs() < 0.02);
}

#[test]
fn batch_config_keeps_input_order_and_flags_override() {
    let path = scratch("batch.json");
    std::fs::write(&path, r#"[{"mu": 0, "p": 3, "s": 5}, {"mu": -1, "p": 2}, {"mu": 0.3, "p": 2}]"#).unwrap();
    let out = run(&["regime", "--config", path.to_str().unwrap(), "--s", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    let verdicts: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["verdict"].as_str().unwrap()).collect();
    assert_eq!(verdicts, ["Existence", "Existence", "NoSuperharmonics"]);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let path = scratch("bad.json");
    std::fs::write(&path, r#"{"mu": 0, "p": 3, "s": 0, "sigma": 1}"#).unwrap();
    assert_eq!(run(&["regime", "--config", path.to_str().unwrap()]).status.code(), Some(64));
}

#[test]
fn thread_cap_does_not_change_output() {
    let args = ["reproduce", "--suite", "thresholds", "--omit-timing"];
    let a = run(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_hardy-blowup")).args(args).env("HARDY_BLOWUP_THREADS", "1").output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn reproduce_suites_pass() {
    for suite in ["thresholds", "ode_lemma", "xxl_slab"] {
        let out = run(&["reproduce", "--suite", suite]);
        assert_eq!(out.status.code(), Some(0), "suite {suite}");
        assert_eq!(json_stdout(&out)["passed"], true);
    }
}
