//! Runtime pipelines over frame sequences.
//!
//! Two-stage: a face detector proposes boxes, each face is cropped and
//! classified into the three mask classes. Single-shot: one detector emits
//! the two detection classes directly.

mod annotate;
mod crop;
mod fps;
mod frame;
mod report;
mod video;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{CLASSIFIER_INPUT_SIDE, DetClass, MaskClass};
use crate::detect::{DEFAULT_CONF_THRESHOLD, DEFAULT_NMS_THRESHOLD};
use crate::error::{Error, Result};

pub use annotate::{annotate_frame, draw_rect, draw_text};
pub use crop::{crop_face, crop_region};
pub use fps::FpsMeter;
pub use frame::{run_single_shot, run_two_stage, FrameClass, FrameDetection, FrameResult};
pub use report::{load_run_report, save_run_report, RunReport};
#[cfg(feature = "native")]
pub use video::{ImageDirSink, ImageDirSource};
pub use video::{run_video, FrameSink, FrameSource, MemorySink, MemorySource, PipelineBackends, VideoRun};

pub const DEFAULT_CROP_MARGIN: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineMode {
    TwoStage,
    SingleShot,
}

impl PipelineMode {
    pub fn name(self) -> &'static str {
        match self {
            PipelineMode::TwoStage => "two-stage",
            PipelineMode::SingleShot => "single-shot",
        }
    }

    pub fn class_space(self) -> ClassSpace {
        match self {
            PipelineMode::TwoStage => ClassSpace::Mask,
            PipelineMode::SingleShot => ClassSpace::Det,
        }
    }
}

impl fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PipelineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-stage" => Ok(PipelineMode::TwoStage),
            "single-shot" => Ok(PipelineMode::SingleShot),
            other => Err(Error::config(format!(
                "unknown pipeline `{other}` (expected two-stage or single-shot)"
            ))),
        }
    }
}

/// Label space of a pipeline's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassSpace {
    /// correct / incorrect / none
    #[serde(rename = "mask-3")]
    Mask,
    /// positive / negative
    #[serde(rename = "det-2")]
    Det,
}

impl ClassSpace {
    pub fn len(self) -> usize {
        match self {
            ClassSpace::Mask => MaskClass::COUNT,
            ClassSpace::Det => DetClass::COUNT,
        }
    }

    pub fn class_names(self) -> Vec<&'static str> {
        match self {
            ClassSpace::Mask => MaskClass::ALL.iter().map(|c| c.name()).collect(),
            ClassSpace::Det => DetClass::ALL.iter().map(|c| c.name()).collect(),
        }
    }
}

/// Outline colors per class id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub mask: [[u8; 3]; 3],
    pub det: [[u8; 3]; 2],
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            mask: [[0, 200, 0], [255, 160, 0], [230, 0, 0]],
            det: [[0, 200, 0], [230, 0, 0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: PipelineMode,
    /// Fraction of the face box added on each side before cropping.
    pub crop_margin: f64,
    pub classifier_input_side: usize,
    pub conf_threshold: f64,
    pub nms_threshold: f64,
    pub palette: Palette,
}

impl PipelineConfig {
    pub fn new(mode: PipelineMode) -> Self {
        Self {
            mode,
            crop_margin: DEFAULT_CROP_MARGIN,
            classifier_input_side: CLASSIFIER_INPUT_SIDE,
            conf_threshold: DEFAULT_CONF_THRESHOLD,
            nms_threshold: DEFAULT_NMS_THRESHOLD,
            palette: Palette::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.crop_margin.is_finite() && self.crop_margin >= 0.0) {
            return Err(Error::config(format!("crop margin {} must be >= 0", self.crop_margin)));
        }
        for (name, v) in [("confidence", self.conf_threshold), ("nms", self.nms_threshold)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(format!("{name} threshold {v} outside (0, 1)")));
            }
        }
        if self.classifier_input_side == 0 {
            return Err(Error::config("classifier input side must be positive"));
        }
        Ok(())
    }
}
