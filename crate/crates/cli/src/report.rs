//! `report.json` and CSV outputs.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::{Command, RunConfig};
use crate::CliError;

/// One mathematical assertion of a run: `value <relation> bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, relation: "<=", bound, passed: value <= bound }
    }
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, relation: ">=", bound, passed: value >= bound }
    }
    pub fn greater(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, relation: ">", bound, passed: value > bound }
    }
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: ok as u8 as f64, relation: "==", bound: 1.0, passed: ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub config: RunConfig,
    pub results: Value,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Report {
    pub fn new(cmd: Command, config: &RunConfig, results: Value, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Report { command: cmd.to_string(), config: config.clone(), results, checks, passed }
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.into()))?;
        text.push('\n');
        fs::write(dir.join("report.json"), text)?;
        Ok(())
    }
}

/// Seventeen significant digits, so values round-trip exactly.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a CSV with a header row into `dir`.
pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(name)).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}
