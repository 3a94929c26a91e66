//! End-to-end checks of the `distboost` binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_distboost"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn distboost");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_quick_config(path: &Path) {
    let cfg = r#"{
  "per_param": [
    {
      "rounds": 25,
      "eta": 0.1,
      "max_depth": 3,
      "min_child_weight": 1.0,
      "lambda": 1.0,
      "gamma": 0.0,
      "subsample": 1.0,
      "colsample_bytree": 1.0
    }
  ],
  "step2": { "epsilon": 1e-4, "max_iter": 5, "rounds_per_update": 1 }
}"#;
    std::fs::write(path, cfg).unwrap();
}

#[test]
fn simulate_train_score_coverage_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = dir.path().join("train.csv");
    let test_csv = dir.path().join("test.csv");
    let config = dir.path().join("config.json");
    let model = dir.path().join("model.json");

    run_ok(bin().args([
        "simulate",
        "--n",
        "1500",
        "--seed",
        "1",
        "--out",
        train_csv.to_str().unwrap(),
    ]));
    run_ok(bin().args([
        "simulate",
        "--n",
        "800",
        "--seed",
        "2",
        "--out",
        test_csv.to_str().unwrap(),
    ]));
    write_quick_config(&config);
    run_ok(bin().args([
        "train",
        "--data",
        train_csv.to_str().unwrap(),
        "--response",
        "y",
        "--family",
        "normal",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        model.to_str().unwrap(),
    ]));

    let cov = run_ok(bin().args([
        "coverage",
        "--model",
        model.to_str().unwrap(),
        "--data",
        test_csv.to_str().unwrap(),
        "--response",
        "y",
        "--pairs",
        "5:95,50:50",
    ]));
    let text = String::from_utf8(cov.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "pair,total_coverage,upper_bound,lower_bound");
    assert!(lines[1].starts_with("(5;95),"));
    let total: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((60.0..100.0).contains(&total), "coverage {total}");
    // the zero-width interval covers nothing
    assert!(lines[2].starts_with("(50;50),0.0000,"));

    let score = run_ok(bin().args([
        "score",
        "--model",
        model.to_str().unwrap(),
        "--data",
        test_csv.to_str().unwrap(),
        "--response",
        "y",
    ]));
    let text = String::from_utf8(score.stdout).unwrap();
    assert!(text.starts_with("metric,value,note\n"));
    assert!(text.contains("\ncrps,"));
    assert!(text.contains("\nrmse,"));

    let imp = run_ok(bin().args([
        "importance",
        "--model",
        model.to_str().unwrap(),
    ]));
    let text = String::from_utf8(imp.stdout).unwrap();
    assert!(text.starts_with("parameter,feature,gain_share\n"));
    assert!(text.contains("sigma,x,"));
}

#[test]
fn predict_emits_params_and_quantiles() {
    let dir = tempfile::tempdir().unwrap();
    let data_csv = dir.path().join("data.csv");
    let config = dir.path().join("config.json");
    let model = dir.path().join("model.json");
    let preds = dir.path().join("preds.csv");

    run_ok(bin().args([
        "simulate",
        "--n",
        "600",
        "--seed",
        "4",
        "--out",
        data_csv.to_str().unwrap(),
    ]));
    write_quick_config(&config);
    run_ok(bin().args([
        "train",
        "--data",
        data_csv.to_str().unwrap(),
        "--response",
        "y",
        "--family",
        "normal",
        "--config",
        config.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ]));
    run_ok(bin().args([
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data_csv.to_str().unwrap(),
        "--response",
        "y",
        "--quantiles",
        "0.05,0.95",
        "--out",
        preds.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&preds).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "mu,sigma,q0.05,q0.95");
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert_eq!(first.len(), 4);
    assert!(first[1] > 0.0);
    assert!(first[2] < first[0] && first[0] < first[3]);
    assert_eq!(text.lines().count(), 601);
}

#[test]
fn predict_with_missing_columns_exits_2_and_names_them() {
    let dir = tempfile::tempdir().unwrap();
    let data_csv = dir.path().join("data.csv");
    let config = dir.path().join("config.json");
    let model = dir.path().join("model.json");
    let preds = dir.path().join("preds.csv");

    run_ok(bin().args([
        "simulate",
        "--n",
        "400",
        "--seed",
        "5",
        "--out",
        data_csv.to_str().unwrap(),
    ]));
    write_quick_config(&config);
    run_ok(bin().args([
        "train",
        "--data",
        data_csv.to_str().unwrap(),
        "--response",
        "y",
        "--family",
        "normal",
        "--config",
        config.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ]));

    std::fs::write(dir.path().join("narrow.csv"), "x,X1\n0.5,0.2\n").unwrap();
    let out = bin()
        .args([
            "predict",
            "--model",
            model.to_str().unwrap(),
            "--data",
            dir.path().join("narrow.csv").to_str().unwrap(),
            "--out",
            preds.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("X2"), "stderr: {stderr}");
    assert!(stderr.contains("X10"), "stderr: {stderr}");
}

#[test]
fn gaic_ranks_lognormal_data_first() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    // strongly skewed positive data
    let mut text = String::from("id,y\n");
    let mut state = 88172645463325252u64;
    let mut uniform = || {
        // xorshift, good enough to drive Box-Muller here
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for i in 0..2000 {
        let u1: f64 = uniform().max(1e-12);
        let u2: f64 = uniform();
        let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        text.push_str(&format!("{i},{}\n", (0.9 * z).exp()));
    }
    std::fs::write(&csv, text).unwrap();

    let out = run_ok(bin().args([
        "gaic",
        "--data",
        csv.to_str().unwrap(),
        "--response",
        "y",
        "--families",
        "normal,lognormal,gamma",
    ]));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "family,gaic");
    assert!(lines[1].starts_with("lognormal,"), "ranking: {text}");
    assert_eq!(lines.len(), 4);
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    let out = bin().arg("--no-such-flag").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("simulate"));
}

#[test]
fn train_rejects_non_numeric_cells_with_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "area,y\n1,2\n2,3\nbig,4\n").unwrap();
    let out = bin()
        .args([
            "train",
            "--data",
            csv.to_str().unwrap(),
            "--response",
            "y",
            "--family",
            "normal",
            "--out",
            dir.path().join("m.json").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("area"), "stderr: {stderr}");
    assert!(stderr.contains('3'), "stderr: {stderr}");
    assert!(stderr.contains("dummy-coded"), "stderr: {stderr}");
}
