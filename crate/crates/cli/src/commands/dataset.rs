use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use maskwatch::data::{
    labels, load_manifest, pseudo_label, save_manifest, split_manifest, Annotation, DetClass, LabelClass, MaskClass,
    SplitRatios,
};
use maskwatch::image::load_image;
use serde::Serialize;

use super::{as_usage, delay, emit_json, image_files, require_dir, require_file, require_output};
use crate::backends;
use crate::config::Resolver;

#[derive(Debug, Subcommand)]
pub enum DatasetCmd {
    /// Scan a dataset directory and write a split manifest.
    Build(BuildArgs),
    /// Re-split an existing manifest.
    Split(SplitArgs),
    /// Turn confident detections into box label files.
    PseudoLabel(PseudoArgs),
}

impl DatasetCmd {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetCmd::Build(_) => "dataset build",
            DatasetCmd::Split(_) => "dataset split",
            DatasetCmd::PseudoLabel(_) => "dataset pseudo-label",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskKind {
    /// `<root>/{correct,incorrect,none}/*.png`
    Classification,
    /// `<root>/images/*.png` with `<root>/labels/<stem>.txt`
    Detection,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    root: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    task: Option<TaskKind>,
    /// Train, validation and test fractions.
    #[arg(long)]
    ratios: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    ratios: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PseudoClass {
    Negative,
    None,
}

#[derive(Debug, Args)]
pub struct PseudoArgs {
    /// Directory of images to label.
    #[arg(long)]
    images: PathBuf,
    /// Directory receiving one `<stem>.txt` box file per kept image.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    detector: Option<String>,
    /// Keep detections strictly above this confidence.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    class: Option<PseudoClass>,
    #[arg(long)]
    stub_delay_ms: Option<u64>,
    /// Summary JSON path (stdout when omitted).
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn execute(cmd: DatasetCmd, cfg: &mut Resolver) -> Result<()> {
    match cmd {
        DatasetCmd::Build(a) => build(a, cfg),
        DatasetCmd::Split(a) => split(a, cfg),
        DatasetCmd::PseudoLabel(a) => pseudo(a, cfg),
    }
}

fn ratios(cfg: &mut Resolver, flag: Option<String>) -> Result<SplitRatios> {
    let file = cfg.file.ratios.clone();
    let text = cfg.pick("ratios", flag, file, "0.8,0.1,0.1".to_string());
    as_usage(text.parse())
}

fn relative(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn build(a: BuildArgs, cfg: &mut Resolver) -> Result<()> {
    require_dir(&a.root, "dataset root")?;
    require_output(&a.out)?;
    let task = match (a.task, cfg.file.task.as_deref()) {
        (Some(t), _) => t,
        (None, Some(t)) => TaskKind::from_str(t, true).map_err(|_| super::usage(format!("unknown task `{t}`")))?,
        (None, None) => TaskKind::Classification,
    };
    let ratios = ratios(cfg, a.ratios)?;
    let seed = cfg.seed(a.seed)?;

    let mut entries = Vec::new();
    match task {
        TaskKind::Classification => {
            for class in MaskClass::ALL {
                let dir = a.root.join(class.name());
                if !dir.is_dir() {
                    log::warn!("no {} directory under {}", class.name(), a.root.display());
                    continue;
                }
                for file in image_files(&dir)? {
                    entries.push((relative(&a.root, &file), Annotation::Label(class)));
                }
            }
        }
        TaskKind::Detection => {
            let images = a.root.join("images");
            require_dir(&images, "image directory")?;
            for file in image_files(&images)? {
                let stem = file.file_stem().expect("file has a name").to_string_lossy().into_owned();
                let label = a.root.join("labels").join(format!("{stem}.txt"));
                if !label.exists() {
                    log::warn!("skipping {}: no label file {}", file.display(), label.display());
                    continue;
                }
                let boxes = labels::read_box_file(&label).with_context(|| label.display().to_string())?;
                entries.push((relative(&a.root, &file), Annotation::Boxes(boxes)));
            }
        }
    }
    entries.sort_by(|x, y| x.0.cmp(&y.0));
    let manifest = split_manifest(entries, &ratios, seed)?;
    save_manifest(&manifest, &a.out)?;
    let (tr, va, te) = manifest.split_counts();
    eprintln!("wrote {} entries (train {tr}, val {va}, test {te}) to {}", manifest.len(), a.out.display());
    Ok(())
}

fn split(a: SplitArgs, cfg: &mut Resolver) -> Result<()> {
    require_file(&a.manifest, "manifest")?;
    require_output(&a.out)?;
    let ratios = ratios(cfg, a.ratios)?;
    let seed = cfg.seed(a.seed)?;
    let manifest = load_manifest(&a.manifest)?;
    let resplit = split_manifest(manifest.unsplit(), &ratios, seed)?;
    save_manifest(&resplit, &a.out)?;
    let (tr, va, te) = resplit.split_counts();
    eprintln!("train {tr}, val {va}, test {te}");
    Ok(())
}

#[derive(Serialize)]
struct PseudoSummary {
    images: usize,
    labeled: usize,
    boxes: usize,
    dropped: usize,
    skipped: Vec<String>,
    notes: Vec<String>,
}

fn pseudo(a: PseudoArgs, cfg: &mut Resolver) -> Result<()> {
    require_dir(&a.images, "image directory")?;
    if let Some(r) = &a.report {
        require_output(r)?;
    }
    let file = cfg.file.detector.clone();
    let detector_id = cfg.pick("detector", a.detector, file, "stub:center".to_string());
    let file = cfg.file.threshold;
    let threshold = cfg.pick("threshold", a.threshold, file, 0.9);
    let file = match cfg.file.class.as_deref() {
        Some(c) => Some(PseudoClass::from_str(c, true).map_err(|_| super::usage(format!("unknown class `{c}`")))?),
        None => None,
    };
    let class = a.class.or(file).unwrap_or(PseudoClass::Negative);
    let target: LabelClass = match class {
        PseudoClass::Negative => DetClass::Negative.into(),
        PseudoClass::None => MaskClass::None.into(),
    };
    cfg.note("class", format!("{class:?}").to_lowercase());
    let file = cfg.file.stub_delay_ms;
    let delay_ms = cfg.pick("stub_delay_ms", a.stub_delay_ms, file, 0);
    let detector = backends::detector(&detector_id, delay(delay_ms))?;

    let images = image_files(&a.images)?;
    let outcome = as_usage(pseudo_label(&images, detector.as_ref(), threshold, target, load_image))?;
    std::fs::create_dir_all(&a.out)?;
    let mut boxes = 0;
    for item in &outcome.labeled {
        let stem = item.image_path.file_stem().expect("file has a name").to_string_lossy();
        labels::write_box_file(&a.out.join(format!("{stem}.txt")), &item.boxes)?;
        boxes += item.boxes.len();
    }
    let summary = PseudoSummary {
        images: images.len(),
        labeled: outcome.labeled.len(),
        boxes,
        dropped: outcome.dropped,
        skipped: outcome.skipped.iter().map(|(p, e)| format!("{}: {e}", p.display())).collect(),
        notes: cfg.notes(),
    };
    emit_json(&summary, a.report.as_deref())
}
