use std::collections::VecDeque;
use std::time::Instant;

use super::{annotate_frame, run_single_shot, run_two_stage, FpsMeter, FrameResult, PipelineConfig, PipelineMode, RunReport};
use crate::detect::DetectorBackend;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::models::ClassifierBackend;

/// A sequence of frames in display order.
pub trait FrameSource {
    /// `None` at the end, `Some(Err(_))` for a frame that failed to decode.
    fn next_frame(&mut self) -> Option<Result<Image>>;

    fn description(&self) -> String;
}

/// Receives annotated frames.
pub trait FrameSink {
    fn write_frame(&mut self, frame_index: usize, frame: &Image) -> Result<()>;
}

#[derive(Debug, Default)]
pub struct MemorySource {
    frames: VecDeque<Result<Image>>,
}

impl MemorySource {
    pub fn new(frames: Vec<Result<Image>>) -> Self {
        Self { frames: frames.into() }
    }

    pub fn from_images(frames: Vec<Image>) -> Self {
        Self::new(frames.into_iter().map(Ok).collect())
    }
}

impl FrameSource for MemorySource {
    fn next_frame(&mut self) -> Option<Result<Image>> {
        self.frames.pop_front()
    }

    fn description(&self) -> String {
        "in-memory frames".into()
    }
}

#[derive(Debug, Default)]
pub struct MemorySink {
    pub frames: Vec<(usize, Image)>,
}

impl FrameSink for MemorySink {
    fn write_frame(&mut self, frame_index: usize, frame: &Image) -> Result<()> {
        self.frames.push((frame_index, frame.clone()));
        Ok(())
    }
}

#[cfg(feature = "native")]
pub use dir::{ImageDirSink, ImageDirSource};

#[cfg(feature = "native")]
mod dir {
    use std::path::{Path, PathBuf};

    use super::{FrameSink, FrameSource};
    use crate::error::{Error, Result};
    use crate::image::{load_image, save_image, Image};

    const FRAME_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

    /// Frames read from a directory of numbered images (`frame_0001.png`,
    /// `7.jpg`, ...), ordered by the trailing number in the file stem.
    #[derive(Debug)]
    pub struct ImageDirSource {
        dir: PathBuf,
        files: std::vec::IntoIter<PathBuf>,
    }

    fn frame_number(path: &Path) -> Option<u64> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        if !FRAME_EXTENSIONS.contains(&ext.as_str()) {
            return None;
        }
        let stem = path.file_stem()?.to_str()?;
        let digits: String = stem
            .chars()
            .rev()
            .take_while(char::is_ascii_digit)
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        digits.parse().ok()
    }

    impl ImageDirSource {
        pub fn open(dir: &Path) -> Result<Self> {
            if !dir.exists() {
                return Err(Error::NotFound(dir.to_path_buf()));
            }
            if !dir.is_dir() {
                return Err(Error::config(format!(
                    "{} is a file; video containers are not decoded, extract frames to a directory of numbered images",
                    dir.display()
                )));
            }
            let mut numbered = Vec::new();
            for entry in std::fs::read_dir(dir)? {
                let path = entry?.path();
                if let Some(n) = frame_number(&path) {
                    numbered.push((n, path));
                }
            }
            numbered.sort();
            if let Some(w) = numbered.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::invalid(format!(
                    "frames {} and {} share number {}",
                    w[0].1.display(),
                    w[1].1.display(),
                    w[0].0
                )));
            }
            if numbered.is_empty() {
                return Err(Error::invalid(format!("no numbered frames in {}", dir.display())));
            }
            Ok(Self {
                dir: dir.to_path_buf(),
                files: numbered.into_iter().map(|(_, p)| p).collect::<Vec<_>>().into_iter(),
            })
        }

        pub fn remaining(&self) -> usize {
            self.files.len()
        }
    }

    impl FrameSource for ImageDirSource {
        fn next_frame(&mut self) -> Option<Result<Image>> {
            self.files.next().map(|p| load_image(&p))
        }

        fn description(&self) -> String {
            self.dir.display().to_string()
        }
    }

    /// Writes `frame_NNNNNN.png` files into a directory.
    #[derive(Debug)]
    pub struct ImageDirSink {
        dir: PathBuf,
    }

    impl ImageDirSink {
        pub fn create(dir: &Path) -> Result<Self> {
            std::fs::create_dir_all(dir)?;
            Ok(Self { dir: dir.to_path_buf() })
        }
    }

    impl FrameSink for ImageDirSink {
        fn write_frame(&mut self, frame_index: usize, frame: &Image) -> Result<()> {
            save_image(frame, &self.dir.join(format!("frame_{frame_index:06}.png")))
        }
    }
}

#[derive(Clone, Copy)]
pub enum PipelineBackends<'a> {
    TwoStage {
        face_detector: &'a dyn DetectorBackend,
        classifier: &'a dyn ClassifierBackend,
    },
    SingleShot {
        detector: &'a dyn DetectorBackend,
    },
}

impl PipelineBackends<'_> {
    pub fn mode(&self) -> PipelineMode {
        match self {
            PipelineBackends::TwoStage { .. } => PipelineMode::TwoStage,
            PipelineBackends::SingleShot { .. } => PipelineMode::SingleShot,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VideoRun {
    pub results: Vec<FrameResult>,
    pub report: RunReport,
}

/// Linearly interpolated percentile of an ascending slice.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = p * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

/// Processes every frame in order, one at a time.
///
/// Frames that fail to decode are skipped and counted as dropped; frame
/// indices count every frame the source yielded. Mean FPS is processed
/// frames over the wall-clock time of the whole loop, decoding and
/// annotation included.
pub fn run_video(
    source: &mut dyn FrameSource,
    cfg: &PipelineConfig,
    backends: PipelineBackends<'_>,
    mut sink: Option<&mut dyn FrameSink>,
) -> Result<VideoRun> {
    cfg.validate()?;
    if backends.mode() != cfg.mode {
        return Err(Error::config(format!(
            "pipeline configured as {} but given {} backends",
            cfg.mode,
            backends.mode()
        )));
    }
    let mut meter = FpsMeter::new(30)?;
    let mut results = Vec::new();
    let mut dropped = 0;
    let mut index = 0;
    let start = Instant::now();
    while let Some(next) = source.next_frame() {
        let frame_index = index;
        index += 1;
        let frame = match next {
            Ok(f) => f,
            Err(e) => {
                log::warn!("dropping frame {frame_index}: {e}");
                dropped += 1;
                continue;
            }
        };
        let result = match backends {
            PipelineBackends::TwoStage {
                face_detector,
                classifier,
            } => run_two_stage(&frame, frame_index, face_detector, classifier, cfg)?,
            PipelineBackends::SingleShot { detector } => run_single_shot(&frame, frame_index, detector, cfg)?,
        };
        if let Some(sink) = sink.as_deref_mut() {
            sink.write_frame(frame_index, &annotate_frame(&frame, &result, &cfg.palette))?;
        }
        results.push(result);
        if let Some(fps) = meter.update(start.elapsed().as_secs_f64())? {
            log::debug!("frame {frame_index}: rolling fps {fps:.2}");
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    if index == 0 {
        return Err(Error::invalid(format!("{} yielded no frames", source.description())));
    }
    if results.is_empty() {
        return Err(Error::invalid(format!(
            "all {dropped} frames from {} failed to decode",
            source.description()
        )));
    }
    let mut latencies: Vec<f64> = results.iter().map(|r| r.latency_ms).collect();
    latencies.sort_by(f64::total_cmp);
    let report = RunReport {
        mode: cfg.mode,
        frames: results.len(),
        dropped,
        mean_fps: results.len() as f64 / seconds,
        latency_ms_p50: percentile(&latencies, 0.5),
        latency_ms_p95: percentile(&latencies, 0.95),
        class_space: cfg.mode.class_space(),
        notes: vec![format!("source: {}", source.description())],
    };
    Ok(VideoRun { results, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.5), 2.5);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 4.0);
        assert!((percentile(&v, 0.95) - 3.85).abs() < 1e-12);
        assert_eq!(percentile(&[7.0], 0.95), 7.0);
    }
}
