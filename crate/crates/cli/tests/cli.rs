//! End-to-end tests against the compiled binary.

use std::path::Path;
use std::process::Command;

fn caution() -> Command {
    Command::new(env!("CARGO_BIN_EXE_caution"))
}

fn write_config(dir: &Path, trials: usize) -> std::path::PathBuf {
    let path = dir.join("experiment.toml");
    let text = format!(
        r#"
d = 6
k = 2
m = 32
rho = 1.0
seed = 11
trials = {trials}
n_grid = [1, 4, 16]
lambdas = [0.0, 0.5]
methods = ["oracle", "bon", "lcb", "softmax", "poisson"]
"#
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn simulate_writes_csv_and_is_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 100);
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("rows-{workers}.csv"));
        let status = caution()
            .args(["simulate", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--workers", workers])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "CSV differs across worker counts");
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(text.starts_with(
        "n,method,lambda,mean_true_reward,std_error,ci_low,ci_high,trials,mean_selected_uncertainty"
    ));
    // 3 n-values, oracle+bon+softmax+poisson + 2 lcb lambdas = 6 per n
    assert_eq!(text.lines().count(), 1 + 3 * 6);
}

#[test]
fn simulate_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 20);
    let out = dir.path().join("rows.json");
    let status = caution()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--format", "json"])
        .status()
        .unwrap();
    assert!(status.success());
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(rows.as_array().unwrap().len() == 3 * 6);
}

#[test]
fn report_summarizes_simulation_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 50);
    let out = dir.path().join("rows.csv");
    assert!(caution()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let output = caution().args(["report", "--in"]).arg(&out).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("peak"), "{text}");
    assert!(text.contains("oracle"), "{text}");
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "d = 4\nk = 9\nrho = 0.0\nseed = 1\n").unwrap();
    let output = caution()
        .args(["simulate", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8(output.stderr).unwrap();
    assert!(err.contains('k'), "stderr should name the field: {err}");
}

#[test]
fn corrupted_oracle_makes_verify_exit_1() {
    let output = caution()
        .args(["verify", "--level", "fast", "--corrupt-oracle"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("FAIL gaussian-max.mc-vs-quadrature-z"), "{text}");
}

#[test]
fn train_and_rerank_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.jsonl");
    // tiny two-slate dataset with 3-dim inputs and 2-dim targets
    let mut lines = Vec::new();
    for i in 0..24 {
        let x = [i as f64 * 0.1 - 1.0, (i % 5) as f64 * 0.2, 0.5];
        let t = [x[0] + x[2], x[1] - x[0]];
        let slate = if i < 12 { "a" } else { "b" };
        lines.push(format!(
            r#"{{"id":"r{i}","input_features":[{},{},{}],"target_features":[{},{}],"proxy_score":{},"slate_id":"{slate}"}}"#,
            x[0], x[1], x[2], t[0], t[1], (i % 7) as f64
        ));
    }
    std::fs::write(&data, lines.join("\n")).unwrap();

    let model = dir.path().join("model.json");
    assert!(caution()
        .args(["train-predictor", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&model)
        .args(["--epochs", "20"])
        .status()
        .unwrap()
        .success());

    let output = caution()
        .args(["rerank", "--slates"])
        .arg(&data)
        .arg("--model")
        .arg(&model)
        .args(["--lambda", "0.5"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("slate a:"), "{text}");
    assert!(text.contains("slate b:"), "{text}");
}
