use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{mean_ap, ConfusionMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Detection,
}

/// Evaluation results. Per-class vectors are indexed by class id and hold
/// `null` for classes absent from the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    pub task: Task,
    pub per_class_accuracy: Vec<Option<f64>>,
    pub total_accuracy: Option<f64>,
    pub confusion: Option<ConfusionMatrix>,
    pub ap_per_class: Vec<Option<f64>>,
    pub map: Option<f64>,
    pub inferences_per_sec: Option<f64>,
    pub hardware: Option<String>,
    pub notes: Vec<String>,
}

pub const REPORT_KEYS: [&str; 9] = [
    "task",
    "per_class_accuracy",
    "total_accuracy",
    "confusion",
    "ap_per_class",
    "map",
    "inferences_per_sec",
    "hardware",
    "notes",
];

const TOLERANCE: f64 = 1e-12;

impl MetricsReport {
    pub fn empty(task: Task) -> Self {
        Self {
            task,
            per_class_accuracy: Vec::new(),
            total_accuracy: None,
            confusion: None,
            ap_per_class: Vec::new(),
            map: None,
            inferences_per_sec: None,
            hardware: None,
            notes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Validation(format!("{name} {v} outside [0, 1]")))
            }
        };
        for v in self.per_class_accuracy.iter().chain(&self.ap_per_class).flatten() {
            unit("per-class value", *v)?;
        }
        if let Some(c) = &self.confusion {
            ConfusionMatrix::from_counts(c.counts().to_vec())?;
            let acc = c.accuracy();
            let consistent = match (acc, self.total_accuracy) {
                (Some(a), Some(b)) => (a - b).abs() <= TOLERANCE,
                (None, None) => true,
                _ => false,
            };
            if !consistent {
                return Err(Error::Validation(format!(
                    "total_accuracy {:?} disagrees with confusion matrix ({acc:?})",
                    self.total_accuracy
                )));
            }
            let rows = c.per_class_accuracy();
            let matches = rows.len() == self.per_class_accuracy.len()
                && rows.iter().zip(&self.per_class_accuracy).all(|(a, b)| match (a, b) {
                    (Some(a), Some(b)) => (a - b).abs() <= TOLERANCE,
                    (None, None) => true,
                    _ => false,
                });
            if !matches {
                return Err(Error::Validation("per_class_accuracy disagrees with confusion matrix".into()));
            }
        }
        if let Some(a) = self.total_accuracy {
            unit("total_accuracy", a)?;
        }
        match (self.map, self.ap_per_class.iter().any(Option::is_some)) {
            (Some(m), true) => {
                let mean = mean_ap(&self.ap_per_class)?;
                if (m - mean).abs() > TOLERANCE {
                    return Err(Error::Validation(format!(
                        "map {m} is not the mean {mean} of ap_per_class"
                    )));
                }
            }
            (Some(m), false) => {
                return Err(Error::Validation(format!("map {m} given without any per-class AP")));
            }
            (None, true) => return Err(Error::Validation("ap_per_class given without map".into())),
            (None, false) => {}
        }
        if let Some(r) = self.inferences_per_sec {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Validation(format!("inferences_per_sec {r} must be positive")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: MetricsReport = parse_keyed_json(text, &REPORT_KEYS)?;
        report.validate()?;
        Ok(report)
    }
}

/// Parses a JSON object that must carry exactly `keys`.
pub(crate) fn parse_keyed_json<T: DeserializeOwned>(text: &str, keys: &[&str]) -> Result<T> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let object = value
        .as_object()
        .ok_or_else(|| Error::Schema("report must be a JSON object".into()))?;
    if let Some(missing) = keys.iter().find(|k| !object.contains_key(**k)) {
        return Err(Error::Schema(format!("missing required key `{missing}`")));
    }
    if let Some(unknown) = object.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(Error::Schema(format!("unknown key `{unknown}`")));
    }
    serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))
}

pub fn write_report(report: &MetricsReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_json())?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<MetricsReport> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    MetricsReport::from_json(&std::fs::read_to_string(path)?)
}
