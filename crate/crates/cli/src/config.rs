//! Experiment configuration: one TOML file per run.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const VERBS: [&str; 7] =
    ["verify-s3", "verify-hyperbolic", "linking", "hopf-asymptotic", "triangle-scan", "alpha-scaling", "m5-estimate"];

/// Field whose lines are traced by `hopf-asymptotic`.
pub const FIELDS: [&str; 4] = ["left-1", "left-2", "left-3", "right-1"];

/// Grid used by `verify-hyperbolic` when none is given.
pub const ALGEBRAIC_GRID: [f64; 7] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];

/// Every knob of every verb. Each verb reads the fields it needs and ignores
/// the rest; missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub verb: String,
    pub seed: u64,
    /// Worker threads; 1 is the bit-exact reference mode.
    pub workers: usize,
    pub out_dir: String,
    /// λ values. Empty means the verb's own default grid.
    pub lambda_grid: Vec<f64>,
    /// Random points for pointwise residuals.
    pub n_points: usize,
    /// Monte Carlo quadrature samples.
    pub n_quad: usize,
    /// Curve pairs for `linking` and `hopf-asymptotic`.
    pub n_pairs: usize,
    /// Quintuples of each group for `m5-estimate`.
    pub n_quintuples: usize,
    /// Polyline segments per benchmark curve.
    pub segments: usize,
    pub n_chords: usize,
    /// Disk radius in curvature radii.
    pub radius_units: f64,
    pub eps: f64,
    pub eps_list: Vec<f64>,
    pub parallel_radius_units: f64,
    pub parallel_phi: f64,
    /// Trajectory length and step for field-line tracing.
    pub t: f64,
    pub step: f64,
    pub field: String,
    /// Smallest tolerance of the Hopf-vs-helicity comparison; the estimate
    /// can be exact with zero spread, so `2 · stderr` alone may be zero.
    pub stderr_floor: f64,
    /// Rescale factors for `verify-hyperbolic`.
    pub rescale: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mc = curlwave::scaling::McParams::default();
        Self {
            verb: String::new(),
            seed: 1,
            workers: 1,
            out_dir: "out".into(),
            lambda_grid: Vec::new(),
            n_points: 1000,
            n_quad: 20_000,
            n_pairs: 500,
            n_quintuples: 10,
            segments: 400,
            n_chords: mc.n_chords,
            radius_units: mc.radius_units,
            eps: mc.eps,
            eps_list: mc.eps_list,
            parallel_radius_units: mc.parallel_radius_units,
            parallel_phi: mc.parallel_phi,
            t: 4.0 * std::f64::consts::PI,
            step: 1e-2,
            field: "left-1".into(),
            stderr_floor: 1e-9,
            rescale: vec![0.5, 2.0, 3.0],
        }
    }
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::ConfigInvalid { field: field.into(), message: message.into() }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn nonzero(field: &str, v: usize) -> Result<(), CliError> {
    if v == 0 {
        Err(invalid(field, "must be at least 1"))
    } else {
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn for_verb(verb: &str) -> Self {
        Self { verb: verb.into(), ..Self::default() }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::ConfigParse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Canonical text; `from_toml(to_toml(c)) == c` and the text is a fixed
    /// point of parse-then-print.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// SHA-256 of the canonical text with the execution settings (`workers`,
    /// `out_dir`) blanked: they never change results.
    pub fn hash(&self) -> String {
        let canonical = Self { workers: 1, out_dir: String::new(), ..self.clone() };
        hex::encode(Sha256::digest(canonical.to_toml().as_bytes()))
    }

    /// The λ grid in effect for this verb.
    pub fn grid(&self) -> Vec<f64> {
        if !self.lambda_grid.is_empty() {
            return self.lambda_grid.clone();
        }
        match self.verb.as_str() {
            "verify-hyperbolic" => ALGEBRAIC_GRID.to_vec(),
            _ => curlwave::scaling::McParams::default().lambdas,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !VERBS.contains(&self.verb.as_str()) {
            return Err(CliError::VerbUnknown(self.verb.clone()));
        }
        nonzero("workers", self.workers)?;
        for (name, v) in [("n_points", self.n_points), ("n_quad", self.n_quad), ("n_pairs", self.n_pairs)] {
            nonzero(name, v)?;
        }
        for (name, v) in [("n_quintuples", self.n_quintuples), ("segments", self.segments), ("n_chords", self.n_chords)] {
            nonzero(name, v)?;
        }
        for (i, &l) in self.lambda_grid.iter().enumerate() {
            positive(&format!("lambda_grid[{i}]"), l)?;
        }
        for (name, v) in [
            ("radius_units", self.radius_units),
            ("eps", self.eps),
            ("parallel_radius_units", self.parallel_radius_units),
            ("t", self.t),
            ("step", self.step),
            ("stderr_floor", self.stderr_floor),
        ] {
            positive(name, v)?;
        }
        if !self.parallel_phi.is_finite() {
            return Err(invalid("parallel_phi", "must be finite"));
        }
        for (i, &e) in self.eps_list.iter().enumerate() {
            positive(&format!("eps_list[{i}]"), e)?;
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("eps_list", "must be strictly decreasing"));
        }
        for (i, &l) in self.rescale.iter().enumerate() {
            positive(&format!("rescale[{i}]"), l)?;
        }
        if !FIELDS.contains(&self.field.as_str()) {
            return Err(invalid("field", format!("unknown field {:?}; expected one of {FIELDS:?}", self.field)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_byte_exact() {
        let mut c = ExperimentConfig::for_verb("triangle-scan");
        c.lambda_grid = vec![1.0, 1.778_279_410_038_923, 0.1 + 0.2, 1e-300, 12345.678_9];
        c.seed = u64::MAX;
        let text = c.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), text);
        for (a, b) in back.lambda_grid.iter().zip(&c.lambda_grid) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn partial_files_take_defaults() {
        let c = ExperimentConfig::from_toml("verb = \"linking\"\nseed = 7\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.n_pairs, ExperimentConfig::default().n_pairs);
        assert!(matches!(ExperimentConfig::from_toml("sed = 1"), Err(CliError::ConfigParse(_))));
    }

    #[test]
    fn validation_names_the_field() {
        let mut c = ExperimentConfig::for_verb("verify-s3");
        assert!(c.validate().is_ok());
        c.eps_list = vec![0.1, 0.2];
        assert!(matches!(c.validate(), Err(CliError::ConfigInvalid { field, .. }) if field == "eps_list"));
        c = ExperimentConfig::for_verb("verify-s3");
        c.lambda_grid = vec![1.0, -2.0];
        assert!(matches!(c.validate(), Err(CliError::ConfigInvalid { field, .. }) if field == "lambda_grid[1]"));
        assert_eq!(ExperimentConfig::for_verb("nope").validate(), Err(CliError::VerbUnknown("nope".into())));
    }

    #[test]
    fn hash_ignores_execution_settings() {
        let a = ExperimentConfig::for_verb("linking");
        let b = ExperimentConfig { workers: 8, out_dir: "elsewhere".into(), ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), ExperimentConfig { seed: 2, ..a }.hash());
    }
}
