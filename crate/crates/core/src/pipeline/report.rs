use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassSpace, PipelineMode};
use crate::error::{Error, Result};
use crate::eval::parse_keyed_json;

/// Summary of one pipeline run over a frame sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub mode: PipelineMode,
    /// Frames processed, excluding dropped ones.
    pub frames: usize,
    pub dropped: usize,
    pub mean_fps: f64,
    pub latency_ms_p50: f64,
    pub latency_ms_p95: f64,
    pub class_space: ClassSpace,
    pub notes: Vec<String>,
}

const KEYS: [&str; 8] = [
    "mode",
    "frames",
    "dropped",
    "mean_fps",
    "latency_ms_p50",
    "latency_ms_p95",
    "class_space",
    "notes",
];

impl RunReport {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::Validation("report covers zero frames".into()));
        }
        if !(self.mean_fps.is_finite() && self.mean_fps > 0.0) {
            return Err(Error::Validation(format!("mean_fps {} must be positive", self.mean_fps)));
        }
        if !(self.latency_ms_p50 > 0.0 && self.latency_ms_p50 <= self.latency_ms_p95 && self.latency_ms_p95.is_finite()) {
            return Err(Error::Validation(format!(
                "latency percentiles p50 {} / p95 {} are inconsistent",
                self.latency_ms_p50, self.latency_ms_p95
            )));
        }
        if self.class_space != self.mode.class_space() {
            return Err(Error::Validation(format!(
                "{} pipeline cannot report class space {:?}",
                self.mode, self.class_space
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: RunReport = parse_keyed_json(text, &KEYS)?;
        report.validate()?;
        Ok(report)
    }
}

pub fn save_run_report(report: &RunReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_json())?;
    Ok(())
}

pub fn load_run_report(path: &Path) -> Result<RunReport> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    RunReport::from_json(&std::fs::read_to_string(path)?)
}
