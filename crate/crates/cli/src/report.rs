use std::path::{Path, PathBuf};

use kyleback_core::export;
use kyleback_core::Result;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Warn,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub measured: f64,
    pub tolerance: f64,
}

/// Outcome of one command. Wall time is kept out of the serialized form so that
/// written reports depend only on the inputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario_name: String,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub wall_time: f64,
    #[serde(skip)]
    out_dir: PathBuf,
}

impl RunReport {
    pub fn new(scenario_name: impl Into<String>, out_dir: &Path) -> Self {
        RunReport {
            scenario_name: scenario_name.into(),
            outputs: Vec::new(),
            checks: Vec::new(),
            wall_time: 0.0,
            out_dir: out_dir.to_path_buf(),
        }
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Writes `contents` under the output directory and records it.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        export::write(self.out_dir.join(name), contents)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Pass when `measured <= tolerance`, otherwise `miss`.
    pub fn check_le(&mut self, name: impl Into<String>, measured: f64, tolerance: f64, miss: Status) {
        let status = if measured <= tolerance { Status::Pass } else { miss };
        self.push(name, status, measured, tolerance);
    }

    /// Pass when `measured >= tolerance`.
    pub fn check_ge(&mut self, name: impl Into<String>, measured: f64, tolerance: f64, miss: Status) {
        let status = if measured >= tolerance { Status::Pass } else { miss };
        self.push(name, status, measured, tolerance);
    }

    pub fn push(&mut self, name: impl Into<String>, status: Status, measured: f64, tolerance: f64) {
        self.checks.push(Check {
            name: name.into(),
            status,
            measured,
            tolerance,
        });
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    /// Adds `report.json` to the outputs and writes it.
    pub fn finish(&mut self) -> Result<()> {
        self.outputs.push("report.json".to_string());
        let text = export::to_json(self);
        export::write(self.out_dir.join("report.json"), &text)
    }
}
