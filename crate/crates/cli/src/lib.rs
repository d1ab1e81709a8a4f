//! Orchestration for the `curlwave` command: configs in, CSV tables,
//! key–value reports and a manifest out.

pub mod config;
pub mod manifest;
pub mod report;
pub mod verbs;

use std::path::PathBuf;
use std::time::Instant;

use thiserror::Error;

use config::ExperimentConfig;
use manifest::{file_digest, RunManifest, Timing, ARTIFACT_VERSION};
use report::{emit_report, Format};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error("invalid config field `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },
    #[error("unknown verb `{0}`; expected one of {verbs:?}", verbs = config::VERBS)]
    VerbUnknown(String),
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("computation failed: {0}")]
    Compute(String),
}

macro_rules! compute_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Compute(e.to_string())
            }
        }
    )*};
}

compute_error!(
    curlwave::lie_frame::FrameError,
    curlwave::yang_mills::QuadratureError,
    curlwave::hyperbolic::HyperbolicError,
    curlwave::linking::LinkingError,
    curlwave::scaling::ScalingError,
    curlwave::fit::FitError
);

/// Runs `f`, appending its wall time to `timings`.
pub fn timed<T>(timings: &mut Vec<Timing>, operation: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    timings.push(Timing { operation: operation.into(), seconds: start.elapsed().as_secs_f64() });
    out
}

/// Validates `config`, runs its verb under the worker cap, and writes into
/// `out_dir`: the canonical config, one CSV per table, `<verb>.report`, and
/// `manifest.toml`.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest, CliError> {
    config.validate()?;
    let dir = PathBuf::from(&config.out_dir);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut timings = Vec::new();
    let mut out = curlwave::mc::with_workers(config.workers, || verbs::dispatch(config, &mut timings))?;

    let mut head = report::Record::default();
    head.put("verb", &config.verb);
    head.put("config_hash", config.hash());
    head.put("seed", config.seed);
    head.put("version", ARTIFACT_VERSION);
    head.entries.append(&mut out.record.entries);
    out.record = head;

    let config_path = dir.join("config.toml");
    std::fs::write(&config_path, config.to_toml()).map_err(|e| CliError::Io(format!("{}: {e}", config_path.display())))?;
    let mut files = vec![config_path];
    files.extend(emit_report(&out, &config.verb, Format::Csv, &dir)?);
    files.extend(emit_report(&out, &config.verb, Format::Record, &dir)?);

    let manifest = RunManifest {
        verb: config.verb.clone(),
        config_hash: config.hash(),
        seed: config.seed,
        workers: config.workers,
        version: ARTIFACT_VERSION.into(),
        passed: out.passed(),
        timings,
        outputs: files.iter().map(|f| file_digest(f)).collect::<Result<_, _>>()?,
    };
    let manifest_path = dir.join("manifest.toml");
    std::fs::write(&manifest_path, manifest.to_toml())
        .map_err(|e| CliError::Io(format!("{}: {e}", manifest_path.display())))?;
    Ok(manifest)
}
