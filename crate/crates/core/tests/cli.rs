//! End-to-end checks of the `mlsnr` binary: flag handling, output files,
//! and the estimate/sets subcommands.

use std::fs;
use std::process::Command;

fn mlsnr() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mlsnr"))
}

#[test]
fn simulate_writes_all_outputs_with_expected_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let output = mlsnr()
        .args(["simulate", "--channels", "6", "--vectors", "500", "--seed", "5", "--snr-db", "8", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));

    let records = fs::read_to_string(out.join("records.csv")).unwrap();
    assert!(records.starts_with("channel,stream,method,empiric_snr_db,estimate_db,error_db,excluded\n"));
    // 6 channels x (2 streams x 4 per-stream methods + 1 joint method).
    assert_eq!(records.lines().count(), 1 + 6 * (2 * 4 + 1));

    let stats = fs::read_to_string(out.join("stats.csv")).unwrap();
    assert!(stats.starts_with("method,stream,samples,mean_error_db,std_error_db\n"));
    // Per method: per-stream rows plus one vert row.
    assert_eq!(stats.lines().count(), 1 + 4 * 3 + 1);

    let hist = fs::read_to_string(out.join("hist.csv")).unwrap();
    assert!(hist.starts_with("method,bin_low_db,bin_high_db,count\n"));
    assert_eq!(hist.lines().count(), 1 + 5 * 80);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["num_channels"], 6);
    assert_eq!(manifest["config"]["noise"]["avg_antenna_snr_db"], 8.0);
    assert_eq!(manifest["seed"], 5);

    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("10-symbol allocation: 80 bit searches vs 2 snr searches"));
}

#[test]
fn simulate_rejects_unknown_modulation_and_methods() {
    let out = mlsnr().args(["simulate", "--modulation", "qam32"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("modulation") && err.contains("qam32"), "stderr: {err}");

    let out = mlsnr()
        .args(["simulate", "--desk", "--methods", "capacity,ph"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--methods") && err.contains("ph"), "stderr: {err}");
}

#[test]
fn simulate_rejects_conflicting_noise_flags() {
    let out = mlsnr()
        .args(["simulate", "--desk", "--rho", "0.5", "--snr-db", "10"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn config_file_provides_base_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(
        &cfg_path,
        r#"{
            "num_channels": 4, "vectors_per_channel": 300,
            "m_t": 2, "m_r": 2,
            "modulation": "qpsk",
            "noise": {"avg_antenna_snr_db": 6.0},
            "methods": ["maxlog"],
            "qpsk_sets_for_higher_qam": false,
            "seed": 77,
            "hist_bin_db": 0.5, "hist_range_db": 4.0
        }"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let output = mlsnr()
        .args(["simulate", "--config"])
        .arg(&cfg_path)
        .args(["--seed", "78", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 78, "flag beats file");
    assert_eq!(manifest["config"]["num_channels"], 4, "file beats default");
    let hist = fs::read_to_string(out.join("hist.csv")).unwrap();
    assert_eq!(hist.lines().count(), 1 + 16, "configured bins honored");
}

#[test]
fn estimate_subcommand_reports_all_methods() {
    let dir = tempfile::tempdir().unwrap();
    let h_path = dir.path().join("h.txt");
    fs::write(&h_path, "1+0i 0.2-0.1i\n-0.3+0.4i 0.9+0i\n").unwrap();
    let out = mlsnr()
        .args(["estimate", "--modulation", "qpsk", "--snr-db", "12", "--input"])
        .arg(&h_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["capacity", "union", "fullsum", "fullsum_bounded", "maxlog", "zf", "ph: "] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
}

#[test]
fn estimate_rejects_malformed_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let h_path = dir.path().join("bad.txt");
    fs::write(&h_path, "1+0i nonsense\n").unwrap();
    let out = mlsnr().args(["estimate", "--input"]).arg(&h_path).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad complex entry"));
}

#[test]
fn sets_subcommand_dumps_families() {
    let out = mlsnr().args(["sets", "--modulation", "qpsk", "--mt", "2"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("full stream=0 count=72"));
    assert!(text.contains("abbreviated stream=1 count=13"));
    assert!(text.contains("single stream=0"));
    assert!(text.contains("common count=12"));
}
