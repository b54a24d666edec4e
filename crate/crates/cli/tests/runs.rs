use std::path::Path;
use std::process::Command;

use sampling_recovery::analysis::{hat_sampling_number, HatClassSpec};
use sampling_recovery_cli::{run_experiment, ExperimentConfig, Mode, CSV_HEADER};

const BIN: &str = env!("CARGO_BIN_EXE_sampling-recovery");

fn small(mode: Mode) -> ExperimentConfig {
    ExperimentConfig {
        mode,
        n_list: vec![4, 8],
        trials: 2,
        members: 2,
        truncation: 256,
        seed: 9,
        ..ExperimentConfig::default()
    }
}

fn write_config(dir: &Path, name: &str, config: &ExperimentConfig) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, config.serialize()).unwrap();
    path
}

#[test]
fn hat_oracle_rows_carry_the_closed_form() {
    let config = ExperimentConfig {
        n_list: vec![2, 4, 8, 16],
        ..small(Mode::HatOracle)
    };
    let out = run_experiment(&config).unwrap();
    let spec = HatClassSpec::new(config.hat_alpha_len, config.hat_beta_h, config.hat_truncation).unwrap();
    assert_eq!(out.rows.len(), 4);
    for row in &out.rows {
        let expect = hat_sampling_number(&spec, row.n);
        assert!((row.analytic.unwrap() - expect).abs() <= 1e-12 * expect);
        assert!((row.worst_error.unwrap() - expect).abs() <= 1e-6);
    }
}

#[test]
fn random_point_certificates_dominate_errors() {
    let out = run_experiment(&small(Mode::RandomPoints)).unwrap();
    assert_eq!(out.rows.len(), 4);
    for row in &out.rows {
        assert!(row.m >= row.n);
        assert!(row.certificate.unwrap() >= row.worst_error.unwrap());
    }
}

#[test]
fn subsampled_rows_report_kept_count() {
    let out = run_experiment(&small(Mode::Subsampled)).unwrap();
    for row in &out.rows {
        let j = row.j.expect("subsampled rows carry #J");
        assert!(j <= row.m && j as f64 <= 13.0 * row.n as f64);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for round in 0..2 {
        let mut config = small(Mode::RandomPoints);
        config.output = dir.path().join(format!("run{round}.csv"));
        let path = write_config(dir.path(), &format!("run{round}.cfg"), &config);
        let status = Command::new(BIN).arg("run").arg("--config").arg(&path).status().unwrap();
        assert!(matches!(status.code(), Some(0) | Some(3)), "{status:?}");
        let csv = std::fs::read(&config.output).unwrap();
        let summary = std::fs::read_to_string(config.summary_path()).unwrap();
        outputs.push((csv, summary));
    }
    assert_eq!(outputs[0].0, outputs[1].0);
    assert_eq!(outputs[0].1, outputs[1].1);
    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
}

#[test]
fn overrides_apply_after_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small(Mode::HatOracle);
    config.output = dir.path().join("oracle.csv");
    let path = write_config(dir.path(), "oracle.cfg", &config);
    let status = Command::new(BIN)
        .args(["run", "--config"])
        .arg(&path)
        .args(["--n-list", "2,4,8,16,32,64"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(&config.output).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn validate_reports_bad_configs_with_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.cfg", &ExperimentConfig::default());
    let out = Command::new(BIN).args(["validate", "--config"]).arg(&good).output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "delta = 0.4\n").unwrap();
    let out = Command::new(BIN).args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let missing = dir.path().join("missing.cfg");
    let out = Command::new(BIN).args(["validate", "--config"]).arg(&missing).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_subcommand_prints_a_table() {
    let out = Command::new(BIN)
        .args(["oracle", "--alpha-len", "3", "--beta-h", "1", "--n-max", "4"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
}
