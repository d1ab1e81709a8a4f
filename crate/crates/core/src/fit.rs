//! Least-squares power-law fits in log-log space.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 3 points for a fit with a confidence interval, got {0}")]
    TooFewPoints(usize),
    #[error("log-log fit needs positive x and y, got ({x}, {y})")]
    NonPositive { x: f64, y: f64 },
    #[error("x values are all equal")]
    DegenerateX,
}

/// `log y = intercept + slope · log x`, with a 95% Student-t half-width on
/// the slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub half_width: f64,
    /// Residuals in log space.
    pub residuals: Vec<f64>,
    /// Exponents quoted alongside the fit for comparison (label, value).
    pub reference_exponents: Vec<(String, f64)>,
}

impl ScalingFit {
    pub fn fit(x: &[f64], y: &[f64]) -> Result<Self, FitError> {
        let n = x.len().min(y.len());
        if n < 3 {
            return Err(FitError::TooFewPoints(n));
        }
        for (&xi, &yi) in x.iter().zip(y) {
            if !(xi > 0.0 && yi > 0.0) {
                return Err(FitError::NonPositive { x: xi, y: yi });
            }
        }
        let lx: Vec<f64> = x[..n].iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = y[..n].iter().map(|v| v.ln()).collect();
        let mx = lx.iter().sum::<f64>() / n as f64;
        let my = ly.iter().sum::<f64>() / n as f64;
        let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
        if sxx == 0.0 {
            return Err(FitError::DegenerateX);
        }
        let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let residuals: Vec<f64> = lx.iter().zip(&ly).map(|(a, b)| b - intercept - slope * a).collect();
        let dof = (n - 2) as f64;
        let s2 = residuals.iter().map(|r| r * r).sum::<f64>() / dof;
        let t = StudentsT::new(0.0, 1.0, dof).expect("dof > 0").inverse_cdf(0.975);
        Ok(Self {
            x: x[..n].to_vec(),
            y: y[..n].to_vec(),
            slope,
            intercept,
            half_width: t * (s2 / sxx).sqrt(),
            residuals,
            reference_exponents: Vec::new(),
        })
    }

    pub fn with_reference(mut self, label: &str, value: f64) -> Self {
        self.reference_exponents.push((label.to_string(), value));
        self
    }

    /// `|slope − claimed| ≤ tolerance`.
    pub fn within(&self, claimed: f64, tolerance: f64) -> bool {
        (self.slope - claimed).abs() <= tolerance
    }

    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}
