use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::{Args, Subcommand};
use maskwatch::data::{load_manifest, Split};
use maskwatch::models::{build_cnn, load_split, save_model, train_classifier, CnnSpec, LabeledImage, TrainOptions};

use super::{as_usage, augmentation, emit_json, load_spec, require_file, require_output};
use crate::config::Resolver;

#[derive(Debug, Subcommand)]
pub enum TrainCmd {
    /// Train the CNN classifier with cross-entropy.
    Classifier(TrainArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Classification manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory the manifest paths are relative to (default: the manifest's directory).
    #[arg(long)]
    pub root: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    /// Network spec (TOML or JSON); the default spec when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f32>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    momentum: Option<f32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Apply training-time augmentation.
    #[arg(long)]
    augment: Option<bool>,
    /// Stop once validation accuracy reaches this value.
    #[arg(long)]
    stop_at: Option<f64>,
    /// Training report JSON (stdout when omitted).
    #[arg(long)]
    report: Option<PathBuf>,
}

pub struct LoadedData {
    pub train: Vec<LabeledImage>,
    pub val: Vec<LabeledImage>,
}

impl DataArgs {
    pub fn check(&self) -> Result<()> {
        require_file(&self.manifest, "manifest")?;
        if let Some(r) = &self.root {
            super::require_dir(r, "dataset root")?;
        }
        Ok(())
    }

    pub fn root(&self) -> PathBuf {
        self.root.clone().unwrap_or_else(|| {
            self.manifest
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(Path::new("."))
                .to_path_buf()
        })
    }

    pub fn load(&self, side: usize) -> Result<LoadedData> {
        let manifest = load_manifest(&self.manifest)?;
        let root = self.root();
        let missing = manifest.missing_files(&root);
        if !missing.is_empty() {
            bail!("{} manifest images missing under {}, first: {}", missing.len(), root.display(), missing[0]);
        }
        Ok(LoadedData {
            train: load_split(&manifest, Split::Train, &root, side)?,
            val: load_split(&manifest, Split::Val, &root, side)?,
        })
    }
}

pub fn execute(cmd: TrainCmd, cfg: &mut Resolver) -> Result<()> {
    let TrainCmd::Classifier(a) = cmd;
    a.data.check()?;
    require_output(&a.out)?;
    let spec = match &a.spec {
        Some(p) => {
            require_file(p, "spec")?;
            load_spec(p)?
        }
        None => CnnSpec::default(),
    };
    let defaults = TrainOptions::default();
    let file = cfg.file.clone();
    let opts = TrainOptions {
        epochs: cfg.pick("epochs", a.epochs, file.epochs, defaults.epochs),
        lr: cfg.pick("lr", a.lr, file.lr, defaults.lr),
        batch_size: cfg.pick("batch", a.batch, file.batch, defaults.batch_size),
        momentum: cfg.pick("momentum", a.momentum, file.momentum, defaults.momentum),
        seed: cfg.seed(a.seed)?,
        stop_at_val_accuracy: cfg.pick_opt("stop_at", a.stop_at, file.stop_at),
    };
    let augment = cfg.pick("augment", a.augment, file.augment, true);
    cfg.note("manifest", a.data.manifest.display());

    let data = a.data.load(spec.input_side)?;
    let mut model = as_usage(build_cnn(&spec, opts.seed))?;
    let aug = augmentation(augment, spec.input_side, *model.normalization());
    let mut report = as_usage(train_classifier(&mut model, &data.train, &data.val, aug.as_ref(), &opts))?;
    save_model(&model, &a.out)?;
    report.notes = cfg.notes();
    if let Some(last) = report.epochs.last() {
        eprintln!(
            "trained {} epochs: loss {:.4}, val accuracy {}",
            report.epochs.len(),
            last.train_loss,
            last.val_accuracy.map_or("n/a".into(), |v| format!("{v:.4}"))
        );
    }
    emit_json(&report, a.report.as_deref())
}
