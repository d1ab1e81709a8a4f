//! CSV tables and key–value records.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Shortest text that parses back to the same bits.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// A CSV table; the header row names every column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header of {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// One acceptance threshold and whether the run met it.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, threshold: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), value, threshold: threshold.into(), pass }
    }

    /// `|value − target| ≤ tolerance`.
    pub fn near(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        let pass = (value - target).abs() <= tolerance;
        Self::new(name, value, format!("|x - {}| <= {}", num(target), num(tolerance)), pass)
    }

    pub fn below(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value, format!("x < {}", num(bound)), value < bound)
    }

    pub fn above(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value, format!("x > {}", num(bound)), value > bound)
    }
}

/// Line-delimited `key = value` pairs, in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record {
    pub entries: Vec<(String, String)>,
}

impl Record {
    pub fn put(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn put_num(&mut self, key: &str, value: f64) {
        self.put(key, num(value));
    }

    pub fn put_fit(&mut self, key: &str, fit: &curlwave::fit::ScalingFit) {
        self.put_num(&format!("{key}.slope"), fit.slope);
        self.put_num(&format!("{key}.half_width"), fit.half_width);
        self.put_num(&format!("{key}.intercept"), fit.intercept);
        self.put(&format!("{key}.n"), fit.x.len());
        for (label, value) in &fit.reference_exponents {
            self.put_num(&format!("{key}.reference.{}", label.replace(' ', "_")), *value);
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            writeln!(out, "{k} = {v}").expect("writing to a string");
        }
        out
    }
}

/// Everything a verb produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerbOutput {
    pub tables: Vec<Table>,
    pub record: Record,
    pub checks: Vec<Check>,
}

impl VerbOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub enum Format {
    Csv,
    Record,
}

fn write(path: &Path, text: &str) -> Result<PathBuf, CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}

/// Writes the tables as `<name>.csv` or the record (with the check lines
/// appended) as `<verb>.report`; returns the files written.
pub fn emit_report(out: &VerbOutput, verb: &str, format: Format, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    match format {
        Format::Csv => out.tables.iter().map(|t| write(&dir.join(format!("{}.csv", t.name)), &t.to_csv())).collect(),
        Format::Record => {
            let mut record = out.record.clone();
            for c in &out.checks {
                let status = if c.pass { "pass" } else { "fail" };
                record.put(&format!("check.{}", c.name), format!("{status} value={} threshold={}", num(c.value), c.threshold));
            }
            record.put("passed", out.passed());
            Ok(vec![write(&dir.join(format!("{verb}.report")), &record.to_text())?])
        }
    }
}
