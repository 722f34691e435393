use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use maskwatch::detect::{DEFAULT_CONF_THRESHOLD, DEFAULT_NMS_THRESHOLD};
use maskwatch::pipeline::{
    run_video, save_run_report, FrameSink, ImageDirSink, ImageDirSource, PipelineBackends, PipelineConfig,
    PipelineMode, DEFAULT_CROP_MARGIN,
};

use super::{as_usage, delay, emit_json, require_file, require_output, usage};
use crate::backends;
use crate::config::Resolver;

#[derive(Debug, Args)]
pub struct RunArgs {
    /// two-stage or single-shot.
    #[arg(long)]
    pipeline: Option<String>,
    /// Directory of numbered frame images.
    #[arg(long)]
    source: PathBuf,
    /// Directory receiving annotated frames.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run report JSON (stdout when omitted).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    conf: Option<f64>,
    #[arg(long)]
    nms: Option<f64>,
    #[arg(long)]
    crop_margin: Option<f64>,
    /// Face detector (two-stage) or mask detector (single-shot) id.
    #[arg(long)]
    detector: Option<String>,
    /// Classifier id for the two-stage pipeline.
    #[arg(long)]
    classifier: Option<String>,
    /// Artificial latency per stub call, in milliseconds.
    #[arg(long)]
    stub_delay_ms: Option<u64>,
}

pub fn execute(a: RunArgs, cfg: &mut Resolver) -> Result<()> {
    require_file(&a.source, "source")?;
    if let Some(r) = &a.report {
        require_output(r)?;
    }
    if let Some(o) = &a.out {
        require_output(o)?;
    }
    let file = cfg.file.clone();
    let mode_name = cfg.pick("pipeline", a.pipeline, file.pipeline, "two-stage".to_string());
    let mode: PipelineMode = as_usage(mode_name.parse())?;
    let mut pcfg = PipelineConfig::new(mode);
    pcfg.conf_threshold = cfg.pick("conf", a.conf, file.conf, DEFAULT_CONF_THRESHOLD);
    pcfg.nms_threshold = cfg.pick("nms", a.nms, file.nms, DEFAULT_NMS_THRESHOLD);
    if mode == PipelineMode::TwoStage {
        pcfg.crop_margin = cfg.pick("crop_margin", a.crop_margin, file.crop_margin, DEFAULT_CROP_MARGIN);
    }
    as_usage(pcfg.validate())?;
    let delay_ms = cfg.pick("stub_delay_ms", a.stub_delay_ms, file.stub_delay_ms, 0);
    let detector_id = cfg.pick("detector", a.detector, file.detector, "stub:center".to_string());
    let classifier_id = match mode {
        PipelineMode::TwoStage => Some(cfg.pick("classifier", a.classifier, file.classifier, "stub:correct".to_string())),
        PipelineMode::SingleShot if a.classifier.is_some() => {
            return Err(usage("--classifier only applies to the two-stage pipeline"));
        }
        PipelineMode::SingleShot => None,
    };
    cfg.note("source", a.source.display());

    let mut source = ImageDirSource::open(&a.source)?;
    let detector = backends::detector(&detector_id, delay(delay_ms))?;
    let classifier = match &classifier_id {
        Some(id) => Some(backends::classifier(id, pcfg.classifier_input_side, delay(0))?),
        None => None,
    };
    let backends = match &classifier {
        Some(c) => {
            pcfg.classifier_input_side = c.input_side();
            PipelineBackends::TwoStage {
                face_detector: detector.as_ref(),
                classifier: c.as_ref(),
            }
        }
        None => PipelineBackends::SingleShot {
            detector: detector.as_ref(),
        },
    };
    let mut sink = match &a.out {
        Some(dir) => Some(ImageDirSink::create(dir)?),
        None => None,
    };
    let run = run_video(&mut source, &pcfg, backends, sink.as_mut().map(|s| s as &mut dyn FrameSink))?;
    let mut report = run.report;
    report.notes.extend(cfg.notes());
    let faces: usize = run.results.iter().map(|r| r.detections.len()).sum();
    eprintln!(
        "{}: {} frames ({} dropped), {faces} detections, {:.2} fps",
        report.mode, report.frames, report.dropped, report.mean_fps
    );
    match a.report {
        Some(p) => Ok(save_run_report(&report, &p)?),
        None => emit_json(&report, None),
    }
}
