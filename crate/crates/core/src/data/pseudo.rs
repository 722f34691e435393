use std::path::{Path, PathBuf};

use super::{BBox, LabelClass};
use crate::detect::DetectorBackend;
use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabeled {
    pub image_path: PathBuf,
    pub boxes: Vec<BBox>,
}

#[derive(Debug, Default)]
pub struct PseudoLabelOutcome {
    pub labeled: Vec<PseudoLabeled>,
    /// Images whose file could not be read, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
    /// Images read successfully but left with no detection above threshold.
    pub dropped: usize,
}

/// Turns confident detections into ground-truth boxes.
///
/// Only detections with `conf > threshold` survive; they are relabeled to
/// `target` and their confidence set to 1. Images with no survivors are
/// dropped, unreadable images are skipped with a warning.
pub fn pseudo_label<P, F>(
    images: &[P],
    detector: &dyn DetectorBackend,
    threshold: f64,
    target: impl Into<LabelClass>,
    mut load: F,
) -> Result<PseudoLabelOutcome>
where
    P: AsRef<Path>,
    F: FnMut(&Path) -> Result<Image>,
{
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::config(format!("pseudo-label threshold {threshold} outside (0, 1)")));
    }
    let cls = target.into().id();
    let mut outcome = PseudoLabelOutcome::default();
    for path in images {
        let path = path.as_ref();
        let frame = match load(path) {
            Ok(frame) => frame,
            Err(e) => {
                log::warn!("skipping unreadable image {}: {e}", path.display());
                outcome.skipped.push((path.to_path_buf(), e.to_string()));
                continue;
            }
        };
        let boxes: Vec<BBox> = detector
            .detect(&frame)?
            .into_iter()
            .filter(|d| d.conf > threshold)
            .filter_map(|d| d.clip_to_unit())
            .map(|d| d.with_cls(cls).with_conf(1.0))
            .collect();
        if boxes.is_empty() {
            outcome.dropped += 1;
            continue;
        }
        outcome.labeled.push(PseudoLabeled {
            image_path: path.to_path_buf(),
            boxes,
        });
    }
    Ok(outcome)
}
