//! End-to-end tests of the `darsim` binary: real process spawns, real
//! config files, real output directories.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

struct RunOutput {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run_darsim(dir: &Path, envs: &[(&str, &str)], args: &[&str]) -> RunOutput {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_darsim"));
    cmd.current_dir(dir).args(args);
    for (key, value) in envs {
        cmd.env(key, value);
    }
    let out = cmd.output().expect("spawn darsim");
    RunOutput {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

fn write_config(dir: &Path, config: &Value) -> PathBuf {
    let path = dir.join("run.json");
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

/// Runs a subcommand expecting success and parses its stdout summary.
fn run_ok(dir: &Path, subcommand: &str, config: &Value) -> Value {
    write_config(dir, config);
    let out = run_darsim(dir, &[], &[subcommand, "--config", "run.json"]);
    assert_eq!(
        out.code, 0,
        "{subcommand} failed\nstdout: {}\nstderr: {}",
        out.stdout, out.stderr
    );
    serde_json::from_str(&out.stdout).expect("summary JSON on stdout")
}

/// Runs a subcommand expecting failure; returns (exit code, stderr).
fn run_err(dir: &Path, subcommand: &str, config: &Value) -> (i32, String) {
    write_config(dir, config);
    let out = run_darsim(dir, &[], &[subcommand, "--config", "run.json"]);
    assert_ne!(out.code, 0, "expected {subcommand} to fail: {}", out.stdout);
    (out.code, out.stderr)
}

fn lcd_config() -> Value {
    json!({
        "signal": {"frequency_hz": 2.5, "high_value": 0.2},
        "carrier": {"kind": "triangle", "frequency_hz": 80.0, "amplitude": 0.4},
        "threshold_element": {
            "kind": "lcd", "threshold": 0.5,
            "spike_height": 1.0, "spike_duration_s": 0.001
        },
        "lpf": {"window": {"carrier_periods": 1}},
        "duration_s": 2.0,
        "sample_rate_hz": 81920.0,
        "out_dir": "out",
        "predict": {"u_s": 0.2}
    })
}

// ---------------------------------------------------------------------------
// predict

#[test]
fn predict_reports_the_spike_train_level() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_ok(dir.path(), "predict", &lcd_config());
    assert_eq!(report["region"], "B_signal_restored");
    let level = report["level"].as_f64().unwrap();
    assert!((level - 0.08).abs() < 1e-12, "level {level}");
    assert!(report.get("t_h").is_none(), "LCD prediction has no duty time");
}

#[test]
fn predict_reports_comparator_level_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "carrier": {"kind": "triangle", "frequency_hz": 80.0, "amplitude": 1.0},
        "threshold_element": {"kind": "comparator", "threshold": 0.5, "high_output": 1.0},
        "predict": {"u_s": 0.2}
    });
    let report = run_ok(dir.path(), "predict", &config);
    let get = |key: &str| report[key].as_f64().unwrap();
    assert!((get("level") - 0.7).abs() < 1e-12);
    assert!((get("t_h") - 0.00875).abs() < 1e-12);
    assert!((get("t_r") - 0.001875).abs() < 1e-12);
    assert!((get("slope") - 160.0).abs() < 1e-12);
    // The echoed config materializes every cross-command default.
    assert_eq!(report["resolved_config"]["seed"], 0);
    assert_eq!(report["resolved_config"]["format"], "csv");
}

#[test]
fn predict_rejects_the_no_output_region() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "carrier": {"kind": "triangle", "frequency_hz": 80.0, "amplitude": 0.2},
        "threshold_element": {"kind": "comparator", "threshold": 0.5, "high_output": 1.0},
        "predict": {"u_s": 0.2}
    });
    let (code, stderr) = run_err(dir.path(), "predict", &config);
    assert_eq!(code, 3, "region errors are domain errors: {stderr}");
    assert!(
        stderr.contains("U_s + U_t < U_th"),
        "stderr names the violated inequality: {stderr}"
    );
}

// ---------------------------------------------------------------------------
// simulate

#[test]
fn simulate_matches_the_predicted_level_within_one_percent() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_ok(dir.path(), "simulate", &lcd_config());
    assert_eq!(summary["region"]["region"], "B_signal_restored");
    let rel_err = summary["relative_error"].as_f64().unwrap();
    assert!(rel_err <= 0.01, "relative error {rel_err}");
    assert!(dir.path().join("out/simulate_trace.csv").is_file());
    assert!(dir.path().join("out/simulate_summary.json").is_file());
}

#[test]
fn simulate_produces_all_zero_output_without_a_carrier() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = lcd_config();
    config["carrier"]["amplitude"] = json!(0.0);
    config["duration_s"] = json!(0.5);
    let summary = run_ok(dir.path(), "simulate", &config);
    assert_eq!(summary["region"]["region"], "A_no_output");
    assert_eq!(summary["measured"]["high_level"].as_f64().unwrap(), 0.0);
    assert_eq!(summary["measured"]["low_level"].as_f64().unwrap(), 0.0);
    assert!(summary.get("predicted_level").is_none());

    let trace = fs::read_to_string(dir.path().join("out/simulate_trace.csv")).unwrap();
    for line in trace.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[2], "0", "te_output stays zero: {line}");
        assert_eq!(cells[3], "0", "smoothed output stays zero: {line}");
    }
}

#[test]
fn simulate_reruns_are_byte_identical() {
    let config = json!({
        "signal": {"frequency_hz": 2.5, "high_value": 0.2},
        "carrier": {"kind": "gaussian_noise", "amplitude": 0.3, "seed": 7},
        "threshold_element": {"kind": "comparator", "threshold": 0.5, "high_output": 1.0},
        "lpf": {"window": {"seconds": 0.0125}},
        "duration_s": 1.0,
        "sample_rate_hz": 2560.0,
        "out_dir": "out"
    });
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        write_config(dir.path(), &config);
        let out = run_darsim(dir.path(), &[], &["simulate", "--config", "run.json"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        snapshots.push((
            out.stdout,
            fs::read(dir.path().join("out/simulate_trace.csv")).unwrap(),
            fs::read(dir.path().join("out/simulate_summary.json")).unwrap(),
        ));
    }
    assert_eq!(snapshots[0], snapshots[1]);
}

// ---------------------------------------------------------------------------
// sweep

fn sweep_config() -> Value {
    json!({
        "signal": {"frequency_hz": 2.5, "high_value": 0.2},
        "carrier": {"kind": "triangle", "frequency_hz": 80.0, "amplitude": 1.0},
        "threshold_element": {
            "kind": "lcd", "threshold": 0.5,
            "spike_height": 1.0, "spike_duration_s": 0.001
        },
        "lpf": {"window": {"carrier_periods": 2}},
        "duration_s": 4.8,
        "sample_rate_hz": 20480.0,
        "out_dir": "out",
        "sweep": {"u_t_grid": [0.1, 0.25, 0.35, 0.45, 0.55, 0.7]}
    })
}

#[test]
fn sweep_region_column_is_monotone_for_a_triangle_carrier() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_ok(dir.path(), "sweep", &sweep_config());
    assert_eq!(summary["n_points"], 6);

    let csv = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "carrier_kind,u_t,region,high_level,low_level,transferred_amplitude,snr_db,gain,r_squared"
    );
    let regions: Vec<&str> = lines.map(|l| l.split(',').nth(2).unwrap()).collect();
    // The carrier lifts the input past threshold from U_s + U_t > U_th and
    // saturates past U_t > U_th, so the labels are sorted A, then B, then C.
    assert_eq!(
        regions,
        [
            "A_no_output",
            "A_no_output",
            "B_signal_restored",
            "B_signal_restored",
            "C_saturated",
            "C_saturated"
        ]
    );
}

#[test]
fn sweep_with_noise_repeats_reports_finite_snr_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "signal": {"frequency_hz": 2.5, "high_value": 0.2},
        "carrier": {"kind": "gaussian_noise", "amplitude": 0.3, "seed": 0},
        "threshold_element": {"kind": "comparator", "threshold": 0.5, "high_output": 1.0},
        "lpf": {"window": {"seconds": 0.0125}},
        "duration_s": 4.8,
        "sample_rate_hz": 2560.0,
        "out_dir": "out",
        "seed": 42,
        "sweep": {"u_t_grid": [0.2, 0.3, 0.45], "repeats": 10}
    });
    run_ok(dir.path(), "sweep", &config);
    let csv = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let snr_db: f64 = line.split(',').nth(6).unwrap().parse().unwrap();
        assert!(
            snr_db.is_finite() && snr_db.abs() < 150.0,
            "noise-carrier SNR must be finite and uncapped: {line}"
        );
    }
}

#[test]
fn sweep_rejects_an_empty_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = sweep_config();
    config["sweep"]["u_t_grid"] = json!([]);
    let (code, stderr) = run_err(dir.path(), "sweep", &config);
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("grid"), "{stderr}");
}

// ---------------------------------------------------------------------------
// quest

fn quest_config(n_sessions: u64, seed: u64) -> Value {
    json!({
        "observer": {
            "kind": "weibull", "true_threshold": 0.3,
            "beta": 3.0, "gamma": 0.25, "delta": 0.01
        },
        "out_dir": "out",
        "seed": seed,
        "n_sessions": n_sessions
    })
}

#[test]
fn quest_default_design_emits_320_trial_rows() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_ok(dir.path(), "quest", &quest_config(1, 3));
    assert_eq!(summary["conditions"], json!([0.0, 0.375, 0.5, 0.75]));

    let csv = fs::read_to_string(dir.path().join("out/quest_trials.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "session,block,condition,trial,intensity,target_quadrant,response,correct"
    );
    // 4 conditions × 2 blocks × 40 trials per condition and block.
    assert_eq!(lines.len() - 1, 320);
}

#[test]
fn quest_recovers_a_known_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_ok(dir.path(), "quest", &quest_config(20, 1111));
    // The observer ignores the carrier, so every (session, condition,
    // block) staircase estimates the same 0.30 threshold.
    let mut estimates: Vec<f64> = summary["vct"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|s| s.as_array().unwrap())
        .flat_map(|c| c.as_array().unwrap())
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(estimates.len(), 20 * 4 * 2);
    estimates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = estimates[estimates.len() / 2];
    assert!(
        (median - 0.30).abs() < 0.05,
        "median estimate {median} is not within ±0.05 of the true threshold"
    );
}

#[test]
fn quest_without_an_observer_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stderr) = run_err(dir.path(), "quest", &json!({"out_dir": "out"}));
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("observer"), "{stderr}");
}

// ---------------------------------------------------------------------------
// analyze

fn write_paired_csv(path: &Path, rows: &[(f64, f64)]) {
    let mut text = String::from("subject,vct_control,vct_test\n");
    for (i, (c, t)) in rows.iter().enumerate() {
        text.push_str(&format!("{},{c},{t}\n", i + 1));
    }
    fs::write(path, text).unwrap();
}

fn analyze_config(n_reshuffles: u64, n_bootstrap: u64) -> Value {
    json!({
        "out_dir": "out",
        "seed": 4242,
        "analyze": {
            "input": "paired.csv",
            "control_column": "vct_control",
            "test_column": "vct_test",
            "n_reshuffles": n_reshuffles,
            "n_bootstrap": n_bootstrap
        }
    })
}

/// Deterministic synthetic pairs with a clear negative shift.
fn shifted_pairs() -> Vec<(f64, f64)> {
    (0..16)
        .map(|i| {
            let control = 0.5 + 0.012 * (i as f64) % 0.09;
            let test = control - 0.03 - 0.002 * ((i % 5) as f64);
            (control, test)
        })
        .collect()
}

#[test]
fn analyze_identical_columns_report_no_effect() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<(f64, f64)> = (0..12).map(|i| (0.4 + 0.01 * i as f64, 0.4 + 0.01 * i as f64)).collect();
    write_paired_csv(&dir.path().join("paired.csv"), &rows);
    let summary = run_ok(dir.path(), "analyze", &analyze_config(999, 500));
    let p = summary["permutation"]["p_value"].as_f64().unwrap();
    assert!(p >= 0.99, "identical columns must not look significant: p = {p}");
    assert_eq!(summary["effect_size"]["cohens_d"].as_f64().unwrap(), 0.0);
    assert_eq!(summary["effect_size"]["ci_low"].as_f64().unwrap(), 0.0);
    assert_eq!(summary["effect_size"]["ci_high"].as_f64().unwrap(), 0.0);
}

#[test]
fn analyze_matches_the_library_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let rows = shifted_pairs();
    write_paired_csv(&dir.path().join("paired.csv"), &rows);
    let summary = run_ok(dir.path(), "analyze", &analyze_config(999, 500));

    let control: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let test: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let perm =
        darsim_core::analysis::permutation_ttest_paired(&control, &test, 999, 4242).unwrap();
    let effect =
        darsim_core::analysis::bootstrap_cohens_d_paired(&control, &test, 500, 4242).unwrap();

    assert_eq!(summary["permutation"]["p_value"].as_f64().unwrap(), perm.p_value);
    assert_eq!(
        summary["permutation"]["observed_stat"].as_f64().unwrap(),
        perm.observed_stat
    );
    assert_eq!(
        summary["effect_size"]["cohens_d"].as_f64().unwrap(),
        effect.cohens_d
    );
    assert_eq!(summary["effect_size"]["ci_low"].as_f64().unwrap(), effect.ci_low);
    assert_eq!(summary["effect_size"]["ci_high"].as_f64().unwrap(), effect.ci_high);
}

#[test]
fn analyze_locates_malformed_cells() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("paired.csv"),
        "subject,vct_control,vct_test\n1,0.5,0.45\n2,0.51,oops\n3,0.49,0.46\n",
    )
    .unwrap();
    let (code, stderr) = run_err(dir.path(), "analyze", &analyze_config(99, 50));
    assert_eq!(code, 2, "{stderr}");
    assert!(
        stderr.contains("row 3") && stderr.contains("vct_test"),
        "diagnostic names the offending row and column: {stderr}"
    );
}

#[test]
fn analyze_reports_missing_columns_by_name() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("paired.csv"), "a,b\n1,2\n").unwrap();
    let (code, stderr) = run_err(dir.path(), "analyze", &analyze_config(99, 50));
    assert_eq!(code, 2, "{stderr}");
    assert!(
        stderr.contains("vct_control") && stderr.contains("found: a, b"),
        "{stderr}"
    );
}

// ---------------------------------------------------------------------------
// configuration plumbing

#[test]
fn unknown_config_keys_are_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stderr) = run_err(dir.path(), "predict", &json!({"sede": 1}));
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("sede"), "{stderr}");
}

#[test]
fn flags_override_config_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = quest_config(1, 3);
    config.as_object_mut().unwrap().remove("out_dir");
    config.as_object_mut().unwrap().remove("seed");
    write_config(dir.path(), &config);

    // Without --out, the environment variable picks the output directory.
    let out = run_darsim(
        dir.path(),
        &[("DARSIM_OUT_DIR", "env_out")],
        &["quest", "--config", "run.json"],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(dir.path().join("env_out/quest_trials.csv").is_file());

    // --out beats the environment, --seed beats the config default, and
    // --format json switches the trial table to a JSON array.
    let out = run_darsim(
        dir.path(),
        &[("DARSIM_OUT_DIR", "env_out")],
        &[
            "quest",
            "--config",
            "run.json",
            "--out",
            "flag_out",
            "--seed",
            "99",
            "--format",
            "json",
        ],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    let summary: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(summary["resolved_config"]["seed"], 99);
    assert_eq!(summary["resolved_config"]["out_dir"], "flag_out");
    let trials: Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("flag_out/quest_trials.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(trials.as_array().unwrap().len(), 320);
}
