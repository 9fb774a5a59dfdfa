use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    run_with_threads(args, None)
}

fn run_with_threads(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_embedgame"));
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("EMBEDGAME_THREADS", n),
        None => cmd.env_remove("EMBEDGAME_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn verdict(name: &str) -> bool {
    let o = run(&["primitive", data(name).to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    v["trivial"].as_bool().unwrap()
}

#[test]
fn primitive_verdicts() {
    assert!(!verdict("ot.json"));
    assert!(verdict("coin.json"));
    assert!(verdict("biased_pair.json"));
}

#[test]
fn primitive_text_format() {
    let o = run(&["primitive", data("ot.json").to_str().unwrap(), "--format", "text"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("verdict: non-trivial"));
}

#[test]
fn embed_reports_comparison_pair() {
    let o = run(&["embed", data("ot.json").to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["correct"], true);
    assert_eq!(v["classification"]["verdict"], "NonTrivial");
    let tau = v["comparison_pair"]["tau"].as_f64().unwrap();
    assert!(tau > 0.0 && tau < 1.0);
}

#[test]
fn game_at_half_reports_both_payoffs() {
    let o = run(&["game", "--tau", "0.5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 2);
    let payoff = |kind: &str| -> f64 {
        rows.iter().find(|r| r[col("strategy_kind")] == kind).unwrap()[col("payoff")]
            .parse()
            .unwrap()
    };
    assert!((payoff("coherent") - 0.5).abs() < 1e-6);
    assert!((payoff("separable_product") - 0.25).abs() < 1e-6);
    assert_eq!(rows[0][col("c_star")], rows[0][col("c")]);
}

#[test]
fn game_grid_has_row_per_tau_and_strategy() {
    let o = run(&["game", "--tau", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1 + 18);
}

#[test]
fn out_of_domain_tau_is_a_usage_error() {
    assert_eq!(run(&["game", "--tau", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["certify", "--tau", "0.005"]).status.code(), Some(2));
    assert_eq!(run(&["game", "--tau", "0.5", "--c", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn unverified_certificate_exits_one() {
    let o = run(&["certify", "--tau", "0.5", "--budget", "50"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["all_pass"], false);
    assert_eq!(v["results"][0]["certificate"]["verified"], false);
}

#[test]
fn output_is_identical_across_thread_counts() {
    let args = ["game", "--tau", "0.3,0.5", "--m", "8", "--trials", "3000", "--seed", "11"];
    let one = run_with_threads(&args, Some("1"));
    let four = run_with_threads(&args, Some("4"));
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
    // Analytic and Monte Carlo row for each tau and strategy.
    assert_eq!(stdout(&one).lines().count(), 1 + 8);
}

#[test]
fn bad_thread_setting_is_rejected() {
    assert_eq!(run_with_threads(&["game", "--tau", "0.5"], Some("zero")).status.code(), Some(2));
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("embedgame-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bounds.csv");
    let o = run(&["bounds", "--tau", "0.5", "--steps", "4", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1 + 5);
    std::fs::remove_dir_all(dir).ok();
}
