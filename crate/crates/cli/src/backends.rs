//! Backend identifiers accepted on the command line.
//!
//! Detectors: `stub:center`, `stub:empty`, `stub:graded`, or
//! `replay:<file>` (a detection interchange file whose image ids are
//! 0-based frame numbers). Classifiers: `stub:correct`, `stub:incorrect`,
//! `stub:none`, or a model file path (optionally prefixed `model:`).

use std::path::Path;
use std::time::Duration;

use anyhow::{Context, Result};
use maskwatch::data::{BBox, MaskClass};
use maskwatch::detect::interchange::read_detections;
use maskwatch::detect::{DetectorBackend, ScriptedDetector};
use maskwatch::models::{load_model, ClassifierBackend, FixedClassifier};

use crate::Usage;

pub fn detector(id: &str, delay: Duration) -> Result<Box<dyn DetectorBackend>> {
    let scripted = match id {
        "stub:center" => ScriptedDetector::repeating(id, vec![BBox::new(0.5, 0.45, 0.4, 0.5, 0, 0.95)]),
        "stub:empty" => ScriptedDetector::repeating(id, vec![]),
        "stub:graded" => ScriptedDetector::repeating(
            id,
            vec![
                BBox::new(0.2, 0.3, 0.2, 0.2, 0, 0.95),
                BBox::new(0.5, 0.6, 0.2, 0.2, 0, 0.9),
                BBox::new(0.8, 0.3, 0.2, 0.2, 0, 0.85),
            ],
        ),
        _ => {
            let Some(path) = id.strip_prefix("replay:") else {
                return Err(Usage(format!(
                    "unknown detector `{id}` (expected stub:center, stub:empty, stub:graded or replay:<file>)"
                ))
                .into());
            };
            let records = read_detections(Path::new(path)).with_context(|| format!("detector {id}"))?;
            let mut script: Vec<Vec<BBox>> = Vec::new();
            for (image, det) in records {
                let frame: usize = image
                    .parse()
                    .map_err(|_| Usage(format!("replay file {path}: image id `{image}` is not a frame number")))?;
                if script.len() <= frame {
                    script.resize(frame + 1, Vec::new());
                }
                script[frame].push(det);
            }
            ScriptedDetector::per_call(id, script)
        }
    };
    Ok(Box::new(scripted.with_delay(delay)))
}

/// `stub_side` is the input side given to stub classifiers; models keep their own.
pub fn classifier(id: &str, stub_side: usize, delay: Duration) -> Result<Box<dyn ClassifierBackend>> {
    if let Some(class) = id.strip_prefix("stub:") {
        let class: MaskClass = class
            .parse()
            .map_err(|_| Usage(format!("unknown stub classifier `{id}` (expected stub:correct|incorrect|none)")))?;
        return Ok(Box::new(FixedClassifier::favoring(class, stub_side).with_delay(delay)));
    }
    let path = id.strip_prefix("model:").unwrap_or(id);
    Ok(Box::new(load_model(Path::new(path)).with_context(|| format!("classifier {path}"))?))
}
