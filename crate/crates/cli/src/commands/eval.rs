use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use maskwatch::data::{load_manifest, MaskClass, Split};
use maskwatch::detect::interchange::{read_detections, read_ground_truth};
use maskwatch::eval::{classify_metrics, map_at_iou, write_report, MetricsReport, Task, DEFAULT_IOU_THRESHOLD};
use maskwatch::models::{load_split, predict_classes};

use super::train::DataArgs;
use super::{as_usage, emit_json, require_file, require_output, usage};
use crate::backends;
use crate::config::Resolver;

#[derive(Debug, Subcommand)]
pub enum EvalCmd {
    /// Accuracy and confusion matrix of a classifier on a manifest split.
    Classifier(ClassifierArgs),
    /// Per-class AP and mAP of detections against ground truth.
    Detector(DetectorArgs),
}

impl EvalCmd {
    pub fn name(&self) -> &'static str {
        match self {
            EvalCmd::Classifier(_) => "eval classifier",
            EvalCmd::Detector(_) => "eval detector",
        }
    }
}

#[derive(Debug, Args)]
pub struct ClassifierArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model file or stub classifier id.
    #[arg(long)]
    model: String,
    /// Split to evaluate: train, val or test.
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectorArgs {
    /// Detections: `<image_id> <class_id> <conf> <cx> <cy> <w> <h>` per line.
    #[arg(long)]
    dets: PathBuf,
    /// Ground truth: `<image_id> <class_id> <cx> <cy> <w> <h>` per line.
    #[arg(long)]
    gts: PathBuf,
    #[arg(long)]
    iou: Option<f64>,
    /// Number of classes (ids 0..N).
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn execute(cmd: EvalCmd, cfg: &mut Resolver) -> Result<()> {
    match cmd {
        EvalCmd::Classifier(a) => classifier(a, cfg),
        EvalCmd::Detector(a) => detector(a, cfg),
    }
}

fn finish(mut report: MetricsReport, cfg: &Resolver, path: Option<PathBuf>) -> Result<()> {
    report.notes.extend(cfg.notes());
    match path {
        Some(p) => write_report(&report, &p).with_context(|| format!("writing {}", p.display())),
        None => emit_json(&report, None),
    }
}

fn classifier(a: ClassifierArgs, cfg: &mut Resolver) -> Result<()> {
    a.data.check()?;
    if let Some(r) = &a.report {
        require_output(r)?;
    }
    let file = cfg.file.split.clone();
    let split_name = cfg.pick("split", a.split, file, "test".to_string());
    let split = match split_name.as_str() {
        "train" => Split::Train,
        "val" => Split::Val,
        "test" => Split::Test,
        other => return Err(usage(format!("unknown split `{other}`"))),
    };
    cfg.note("model", &a.model);
    let model = backends::classifier(&a.model, maskwatch::data::CLASSIFIER_INPUT_SIDE, super::delay(0))?;
    let manifest = load_manifest(&a.data.manifest)?;
    let samples = load_split(&manifest, split, &a.data.root(), model.input_side())?;
    if samples.is_empty() {
        return Err(usage(format!("manifest has no {split_name} samples")));
    }
    let images: Vec<_> = samples.iter().map(|s| s.image.clone()).collect();
    let predictions: Vec<u32> = predict_classes(model.as_ref(), &images)?.iter().map(|c| c.id()).collect();
    let labels: Vec<u32> = samples.iter().map(|s| s.label.id()).collect();
    let report = as_usage(classify_metrics(&predictions, &labels, MaskClass::COUNT))?;
    eprintln!("{split_name} accuracy {:.4}", report.total_accuracy.unwrap_or(0.0));
    finish(report, cfg, a.report)
}

fn detector(a: DetectorArgs, cfg: &mut Resolver) -> Result<()> {
    require_file(&a.dets, "detections file")?;
    require_file(&a.gts, "ground-truth file")?;
    if let Some(r) = &a.report {
        require_output(r)?;
    }
    let file = cfg.file.iou;
    let iou = cfg.pick("iou", a.iou, file, DEFAULT_IOU_THRESHOLD);
    let file = cfg.file.classes;
    let classes = cfg.pick("classes", a.classes, file, 2);
    let dets = read_detections(&a.dets)?;
    let gts = read_ground_truth(&a.gts)?;
    let ids: Vec<u32> = (0..classes as u32).collect();
    let result = as_usage(map_at_iou(&dets, &gts, &ids, iou))?;
    let mut report = MetricsReport::empty(Task::Detection);
    report.ap_per_class = result.per_class.values().copied().collect();
    report.map = Some(result.mean);
    eprintln!("mAP@{iou} {:.4}", result.mean);
    finish(report, cfg, a.report)
}
