use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use super::{decode_grid, nms, Detection, GridOutput};
use crate::error::{Error, Result};
use crate::image::Image;

/// A model that localizes (and possibly classifies) faces in a frame.
///
/// Implementations wrap external networks: a face detector for the
/// two-stage pipeline, or a fine-tuned single-shot detector. Callers
/// serialize `detect` calls unless [`DetectorBackend::concurrent`] says
/// otherwise.
pub trait DetectorBackend: Send + Sync {
    fn name(&self) -> &str;

    fn detect(&self, frame: &Image) -> Result<Vec<Detection>>;

    fn concurrent(&self) -> bool {
        false
    }
}

/// Runs the backend, drops detections below `conf_threshold` and applies NMS.
pub fn detect_frame(
    backend: &dyn DetectorBackend,
    frame: &Image,
    conf_threshold: f64,
    nms_threshold: f64,
) -> Result<Vec<Detection>> {
    let tag = |e: Error| match e {
        e @ Error::Backend { .. } => e,
        other => Error::backend(backend.name(), other.to_string()),
    };
    let raw = backend.detect(frame).map_err(tag)?;
    for d in &raw {
        d.validate().map_err(tag)?;
    }
    let kept: Vec<Detection> = raw.into_iter().filter(|d| d.conf >= conf_threshold).collect();
    Ok(nms(&kept, nms_threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScriptMode {
    Repeat,
    PerCall,
}

/// Emits pre-recorded detections, optionally sleeping to emulate model latency.
///
/// In per-call mode the `k`-th call returns script entry `k` (empty once the
/// script runs out), so calls must be serialized for reproducible output.
#[derive(Debug)]
pub struct ScriptedDetector {
    name: String,
    script: Vec<Vec<Detection>>,
    mode: ScriptMode,
    delay: Duration,
    calls: AtomicUsize,
}

impl ScriptedDetector {
    pub fn repeating(name: impl Into<String>, detections: Vec<Detection>) -> Self {
        Self {
            name: name.into(),
            script: vec![detections],
            mode: ScriptMode::Repeat,
            delay: Duration::ZERO,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn per_call(name: impl Into<String>, script: Vec<Vec<Detection>>) -> Self {
        Self {
            name: name.into(),
            script,
            mode: ScriptMode::PerCall,
            delay: Duration::ZERO,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl DetectorBackend for ScriptedDetector {
    fn name(&self) -> &str {
        &self.name
    }

    fn detect(&self, _frame: &Image) -> Result<Vec<Detection>> {
        let k = self.calls.fetch_add(1, Ordering::SeqCst);
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        Ok(match self.mode {
            ScriptMode::Repeat => self.script.first().cloned().unwrap_or_default(),
            ScriptMode::PerCall => self.script.get(k).cloned().unwrap_or_default(),
        })
    }
}

type GridModel = dyn Fn(&Image) -> Result<GridOutput> + Send + Sync;

/// Adapts a network that produces an activated [`GridOutput`] per frame.
pub struct GridDetector {
    name: String,
    model: Box<GridModel>,
    decode_threshold: f64,
}

impl GridDetector {
    pub fn new(
        name: impl Into<String>,
        decode_threshold: f64,
        model: impl Fn(&Image) -> Result<GridOutput> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            model: Box::new(model),
            decode_threshold,
        }
    }
}

impl DetectorBackend for GridDetector {
    fn name(&self) -> &str {
        &self.name
    }

    fn detect(&self, frame: &Image) -> Result<Vec<Detection>> {
        decode_grid(&(self.model)(frame)?, self.decode_threshold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::BBox;

    struct Failing;

    impl DetectorBackend for Failing {
        fn name(&self) -> &str {
            "flaky-net"
        }

        fn detect(&self, _frame: &Image) -> Result<Vec<Detection>> {
            Err(Error::invalid("tensor shape mismatch"))
        }
    }

    fn frame() -> Image {
        Image::filled(4, 4, [0.0; 3])
    }

    #[test]
    fn nothing_in_nothing_out() {
        let det = ScriptedDetector::repeating("stub", vec![]);
        assert!(detect_frame(&det, &frame(), 0.25, 0.45).unwrap().is_empty());
    }

    #[test]
    fn overlapping_pair_collapses() {
        let a = BBox::new(0.5, 0.5, 0.3, 0.3, 0, 0.9);
        let det = ScriptedDetector::repeating("stub", vec![a.with_conf(0.6), a]);
        assert_eq!(detect_frame(&det, &frame(), 0.25, 0.45).unwrap(), vec![a]);
    }

    #[test]
    fn scripted_four_detections() {
        // a (0.9) and b (0.8) overlap heavily; c is another class on top of a;
        // d is below the confidence threshold.
        let a = BBox::new(0.30, 0.30, 0.2, 0.2, 0, 0.9);
        let b = BBox::new(0.32, 0.30, 0.2, 0.2, 0, 0.8);
        let c = BBox::new(0.30, 0.30, 0.2, 0.2, 1, 0.7);
        let d = BBox::new(0.80, 0.80, 0.1, 0.1, 0, 0.2);
        let det = ScriptedDetector::repeating("stub", vec![d, c, b, a]);
        assert_eq!(detect_frame(&det, &frame(), 0.25, 0.45).unwrap(), vec![a, c]);
    }

    #[test]
    fn errors_are_tagged_with_backend_name() {
        match detect_frame(&Failing, &frame(), 0.25, 0.45) {
            Err(Error::Backend { name, message }) => {
                assert_eq!(name, "flaky-net");
                assert!(message.contains("tensor shape"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_backend_boxes_are_rejected() {
        let det = ScriptedDetector::repeating("sloppy", vec![BBox::new(0.5, 0.5, 0.2, 0.2, 0, 1.7)]);
        assert!(matches!(
            detect_frame(&det, &frame(), 0.25, 0.45),
            Err(Error::Backend { name, .. }) if name == "sloppy"
        ));
    }

    #[test]
    fn per_call_script_runs_out() {
        let a = BBox::new(0.5, 0.5, 0.2, 0.2, 0, 0.9);
        let det = ScriptedDetector::per_call("stub", vec![vec![a], vec![]]);
        assert_eq!(det.detect(&frame()).unwrap(), vec![a]);
        assert!(det.detect(&frame()).unwrap().is_empty());
        assert!(det.detect(&frame()).unwrap().is_empty());
        assert_eq!(det.calls(), 3);
    }

    #[test]
    fn grid_detector_decodes() {
        let det = GridDetector::new("grid", 0.1, |_| {
            GridOutput::new(2, 1, 2, {
                let mut v = vec![0.0; 2 * 2 * 7];
                v[..7].copy_from_slice(&[0.5, 0.5, 0.5, 0.5, 1.0, 1.0, 0.0]);
                for cell in v.chunks_exact_mut(7).skip(1) {
                    cell[5] = 0.5;
                    cell[6] = 0.5;
                }
                v
            })
        });
        let dets = detect_frame(&det, &frame(), 0.25, 0.45).unwrap();
        assert_eq!(dets, vec![BBox::new(0.25, 0.25, 0.5, 0.5, 0, 1.0)]);
    }
}
