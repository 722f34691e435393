use std::time::Instant;

use super::{crop_face, ClassSpace, PipelineConfig};
use crate::data::{BBox, DetClass, MaskClass};
use crate::detect::{detect_frame, DetectorBackend};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::models::{argmax, softmax_f32, ClassifierBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameClass {
    Mask(MaskClass),
    Det(DetClass),
}

impl FrameClass {
    pub fn id(self) -> u32 {
        match self {
            FrameClass::Mask(c) => c.id(),
            FrameClass::Det(c) => c.id(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FrameClass::Mask(c) => c.name(),
            FrameClass::Det(c) => c.name(),
        }
    }

    pub fn space(self) -> ClassSpace {
        match self {
            FrameClass::Mask(_) => ClassSpace::Mask,
            FrameClass::Det(_) => ClassSpace::Det,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameDetection {
    /// Box with `cls` and `conf` matching `class` and `conf` below.
    pub bbox: BBox,
    pub class: FrameClass,
    pub conf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame_index: usize,
    pub detections: Vec<FrameDetection>,
    pub latency_ms: f64,
}

impl FrameResult {
    /// True when every detection belongs to `space`.
    pub fn in_class_space(&self, space: ClassSpace) -> bool {
        self.detections.iter().all(|d| d.class.space() == space)
    }

    /// Equality ignoring `latency_ms`.
    pub fn same_output(&self, other: &FrameResult) -> bool {
        self.frame_index == other.frame_index && self.detections == other.detections
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    // A zero reading on a coarse clock still counts as work done.
    (start.elapsed().as_secs_f64() * 1e3).max(1e-6)
}

/// Detects faces, then classifies each margin-expanded crop.
///
/// The classifier is called once per face, in detection order, and the
/// reported confidence is its top softmax probability.
pub fn run_two_stage(
    frame: &Image,
    frame_index: usize,
    face_detector: &dyn DetectorBackend,
    classifier: &dyn ClassifierBackend,
    cfg: &PipelineConfig,
) -> Result<FrameResult> {
    let start = Instant::now();
    if classifier.input_side() != cfg.classifier_input_side {
        return Err(Error::config(format!(
            "classifier `{}` takes {}px input, pipeline is configured for {}px",
            classifier.name(),
            classifier.input_side(),
            cfg.classifier_input_side
        )));
    }
    let faces = detect_frame(face_detector, frame, cfg.conf_threshold, cfg.nms_threshold)?;
    let mut detections = Vec::with_capacity(faces.len());
    for face in faces {
        let crop = crop_face(frame, &face, cfg.crop_margin, cfg.classifier_input_side)?;
        let logits = classifier
            .predict_logits(std::slice::from_ref(&crop))
            .map_err(|e| Error::backend(classifier.name(), e.to_string()))?;
        let [logits] = logits[..] else {
            return Err(Error::backend(
                classifier.name(),
                format!("expected 1 logit vector, got {}", logits.len()),
            ));
        };
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::backend(classifier.name(), "non-finite logits"));
        }
        let class = argmax(&logits);
        let conf = f64::from(softmax_f32(&logits)[class.id() as usize]);
        detections.push(FrameDetection {
            bbox: face.with_cls(class.id()).with_conf(conf),
            class: FrameClass::Mask(class),
            conf,
        });
    }
    Ok(FrameResult {
        frame_index,
        detections,
        latency_ms: elapsed_ms(start),
    })
}

/// Runs the detector alone; its class ids are the two detection classes.
pub fn run_single_shot(
    frame: &Image,
    frame_index: usize,
    detector: &dyn DetectorBackend,
    cfg: &PipelineConfig,
) -> Result<FrameResult> {
    let start = Instant::now();
    let dets = detect_frame(detector, frame, cfg.conf_threshold, cfg.nms_threshold)?;
    let detections = dets
        .into_iter()
        .map(|d| {
            let class = DetClass::from_id(d.cls).map_err(|e| Error::backend(detector.name(), e.to_string()))?;
            Ok(FrameDetection {
                bbox: d,
                class: FrameClass::Det(class),
                conf: d.conf,
            })
        })
        .collect::<Result<_>>()?;
    Ok(FrameResult {
        frame_index,
        detections,
        latency_ms: elapsed_ms(start),
    })
}
