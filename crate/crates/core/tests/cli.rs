use std::fs;
use std::process::Command;

fn congestion() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_congestion"));
    cmd.env_remove("RUST_LOG");
    for (key, _) in std::env::vars() {
        if key.starts_with("CONGESTION_") {
            cmd.env_remove(key);
        }
    }
    cmd
}

#[test]
fn unknown_subcommand_exits_with_usage() {
    let out = congestion().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn calibrate_hurst_prints_the_grid() {
    let out = congestion()
        .args(["calibrate-hurst", "--n", "128", "--seeds", "4"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for (row, h) in rows.iter().zip(["0.30", "0.50", "0.70", "0.90"]) {
        assert!(row.trim_start().starts_with(h), "{row}");
    }
}

#[test]
fn synth_then_pipeline_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let status = congestion()
        .args(["synth", "--seed", "3", "--airport", "CAN", "--out-dir"])
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(data.join("labels.csv").is_file());

    let check = congestion()
        .args(["ingest-check", "--airport", "CAN", "--input"])
        .arg(data.join("flights.csv"))
        .output()
        .unwrap();
    assert!(check.status.success());
    let report: serde_json::Value = serde_json::from_slice(&check.stdout).unwrap();
    assert_eq!(report["missing_actual_fraction"], 0.0);
    assert_eq!(report["balanced"], true);

    let config = dir.path().join("run.toml");
    fs::write(&config, "[kmeans]\nk = 3\nseed = 5\n").unwrap();
    let out = dir.path().join("out");
    let run = congestion()
        .arg("--config")
        .arg(&config)
        .args(["--airport", "CAN", "--input"])
        .arg(data.join("flights.csv"))
        .env("CONGESTION_OUT_DIR", &out)
        .env("CONGESTION_K", "4")
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let eval = fs::read_to_string(out.join("cluster_evaluation.csv")).unwrap();
    assert_eq!(eval.lines().count(), 5);
}

#[test]
fn module_errors_exit_non_zero_with_message() {
    let out = congestion()
        .args(["run", "--airport", "CAN", "--input", "/nonexistent/flights.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/flights.csv"));
}
