use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use maskwatch::models::{build_cnn, distill, save_model, DistillConfig};

use super::train::DataArgs;
use super::{as_usage, augmentation, emit_json, load_spec, require_file, require_output};
use crate::backends;
use crate::config::Resolver;

#[derive(Debug, Args)]
pub struct DistillArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Teacher: a model file or a stub classifier id.
    #[arg(long)]
    teacher: String,
    /// Student network spec (TOML or JSON).
    #[arg(long)]
    student_spec: PathBuf,
    /// Output student model file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f32>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    augment: Option<bool>,
    #[arg(long)]
    stop_at: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn execute(a: DistillArgs, cfg: &mut Resolver) -> Result<()> {
    a.data.check()?;
    require_file(&a.student_spec, "student spec")?;
    require_output(&a.out)?;
    if !a.teacher.starts_with("stub:") {
        require_file(std::path::Path::new(a.teacher.strip_prefix("model:").unwrap_or(&a.teacher)), "teacher")?;
    }
    let spec = load_spec(&a.student_spec)?;
    let defaults = DistillConfig::default();
    let file = cfg.file.clone();
    let dcfg = DistillConfig {
        temperature: cfg.pick("temperature", a.temperature, file.temperature, defaults.temperature),
        alpha: cfg.pick("alpha", a.alpha, file.alpha, defaults.alpha),
        epochs: cfg.pick("epochs", a.epochs, file.epochs, defaults.epochs),
        lr: cfg.pick("lr", a.lr, file.lr, defaults.lr),
        batch_size: cfg.pick("batch", a.batch, file.batch, defaults.batch_size),
        stop_at_val_accuracy: cfg.pick_opt("stop_at", a.stop_at, file.stop_at),
    };
    as_usage(dcfg.weights().validate())?;
    let seed = cfg.seed(a.seed)?;
    let augment = cfg.pick("augment", a.augment, file.augment, true);
    cfg.note("teacher", &a.teacher);

    let teacher = backends::classifier(&a.teacher, spec.input_side, super::delay(0))?;
    let data = a.data.load(spec.input_side)?;
    let mut student = as_usage(build_cnn(&spec, seed))?;
    let aug = augmentation(augment, spec.input_side, *student.normalization());
    let mut report = as_usage(distill(&mut student, teacher.as_ref(), &data.train, &data.val, aug.as_ref(), &dcfg, seed))?;
    save_model(&student, &a.out)?;
    report.notes = cfg.notes();
    if let Some(r) = report.parameter_ratio {
        eprintln!("student has {:.3} of the teacher's parameters", r);
    }
    emit_json(&report, a.report.as_deref())
}
