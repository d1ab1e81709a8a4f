use std::path::Path;
use std::process::{Command, Output};

use curlwave_cli::config::ExperimentConfig;
use curlwave_cli::manifest::RunManifest;
use curlwave_cli::{run, CliError};

fn curlwave(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curlwave")).args(args).arg("--out").arg(out).output().unwrap()
}

fn report(dir: &Path, verb: &str) -> String {
    std::fs::read_to_string(dir.join(format!("{verb}.report"))).unwrap()
}

fn value<'a>(report: &'a str, key: &str) -> &'a str {
    report.lines().find_map(|l| l.strip_prefix(&format!("{key} = "))).unwrap_or_else(|| panic!("no {key} in report"))
}

#[test]
fn verify_s3_defaults_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = curlwave(&["verify-s3"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path(), "verify-s3");
    assert!(value(&r, "ym_residual.left").parse::<f64>().unwrap() < 1e-8);
    assert_eq!(value(&r, "seed"), "1");
    assert_eq!(value(&r, "config_hash").len(), 64);
    let csv = std::fs::read_to_string(tmp.path().join("verify-s3.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn threshold_violation_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = curlwave(&["verify-hyperbolic", "--lambda-grid", "1,2,3"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let r = report(tmp.path(), "verify-hyperbolic");
    assert!(r.contains("check.t_times_lambda.constant = fail"));
    assert!(r.contains("check.helicity.lambda = pass"));
    assert_eq!(value(&r, "passed"), "false");
    // One row per λ.
    let csv = std::fs::read_to_string(tmp.path().join("verify-hyperbolic.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = curlwave(&["frobnicate"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown verb"));

    let config = tmp.path().join("bad.toml");
    std::fs::write(&config, "eps_list = [0.1, 0.2]\n").unwrap();
    let out = curlwave(&["triangle-scan", "--config", config.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eps_list"));

    let out = curlwave(&["linking", "--seed", "not-a-number"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let out = curlwave(&["linking", "--config", "/nonexistent/config.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("c.toml");
    std::fs::write(&config, "verb = \"verify-s3\"\nseed = 5\nn_pairs = 20\nsegments = 100\n").unwrap();
    let out = curlwave(&["linking", "--config", config.to_str().unwrap(), "--seed", "9"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path(), "linking");
    assert_eq!(value(&r, "verb"), "linking");
    assert_eq!(value(&r, "seed"), "9");
    assert_eq!(value(&r, "pairs"), "20");
    let written = ExperimentConfig::load(&tmp.path().join("config.toml")).unwrap();
    assert_eq!((written.seed, written.n_pairs, written.verb.as_str()), (9, 20, "linking"));
}

#[test]
fn identical_runs_give_identical_digests() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::for_verb("m5-estimate");
    config.n_quintuples = 2;
    config.segments = 200;
    config.out_dir = tmp.path().to_string_lossy().into_owned();
    let mut digests = Vec::new();
    for _ in 0..2 {
        let manifest = run(&config).unwrap();
        assert!(manifest.passed);
        let text = std::fs::read_to_string(tmp.path().join("manifest.toml")).unwrap();
        assert_eq!(RunManifest::from_toml(&text).unwrap(), manifest);
        assert!(manifest.timings.iter().all(|t| t.seconds >= 0.0));
        digests.push(manifest.digests());
    }
    assert_eq!(digests[0], digests[1]);
    assert_eq!(digests[0].len(), 3);
}

#[test]
fn library_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::for_verb("nope");
    config.out_dir = tmp.path().to_string_lossy().into_owned();
    assert_eq!(run(&config), Err(CliError::VerbUnknown("nope".into())));
    config.verb = "hopf-asymptotic".into();
    config.field = "sideways".into();
    assert!(matches!(run(&config), Err(CliError::ConfigInvalid { field, .. }) if field == "field"));
    config.field = "left-1".into();
    config.n_pairs = 10;
    assert!(matches!(run(&config), Err(CliError::Compute(_))));
}
