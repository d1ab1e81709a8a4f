use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use curlwave_cli::config::ExperimentConfig;
use curlwave_cli::{run, CliError};

/// Beltrami frames, linking numbers and hyperbolic scaling experiments.
///
/// Exit status: 0 when every acceptance check passes, 2 when a check fails,
/// 1 on any error.
#[derive(Debug, Parser)]
#[command(name = "curlwave", version)]
struct Args {
    /// verify-s3 | verify-hyperbolic | linking | hopf-asymptotic |
    /// triangle-scan | alpha-scaling | m5-estimate
    verb: String,
    /// TOML experiment config; missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (1 is the bit-exact reference mode).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated λ values.
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Trajectory length for field-line tracing.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    n_pairs: Option<usize>,
    /// Traced field: left-1 | left-2 | left-3 | right-1.
    #[arg(long)]
    field: Option<String>,
    #[arg(long)]
    n_chords: Option<usize>,
    #[arg(long)]
    n_quad: Option<usize>,
}

impl Args {
    /// The config file (or defaults) with every given flag applied on top.
    fn config(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        c.verb = self.verb.clone();
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.workers {
            c.workers = v;
        }
        if let Some(v) = &self.out {
            c.out_dir = v.to_string_lossy().into_owned();
        }
        if let Some(v) = &self.lambda_grid {
            c.lambda_grid = v.clone();
        }
        if let Some(v) = self.t {
            c.t = v;
        }
        if let Some(v) = self.n_pairs {
            c.n_pairs = v;
        }
        if let Some(v) = &self.field {
            c.field = v.clone();
        }
        if let Some(v) = self.n_chords {
            c.n_chords = v;
        }
        if let Some(v) = self.n_quad {
            c.n_quad = v;
        }
        Ok(c)
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match args.config().and_then(|c| run(&c)) {
        Ok(manifest) => {
            for o in &manifest.outputs {
                println!("{}  {}", o.sha256, o.file);
            }
            if manifest.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("{}: acceptance threshold violated; see {}.report", manifest.verb, manifest.verb);
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
