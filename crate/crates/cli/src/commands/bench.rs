use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use maskwatch::eval::{bench_inference, write_report, BenchTarget, MetricsReport, Task};
use maskwatch::image::{load_image, resize_image, Image};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{emit_json, image_files, require_dir, require_output, usage};
use crate::backends;
use crate::config::Resolver;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Classifier to time: a model file or stub classifier id.
    #[arg(long, conflicts_with = "detector")]
    model: Option<String>,
    /// Detector to time instead of a classifier.
    #[arg(long)]
    detector: Option<String>,
    /// Directory of input images; seeded noise images when omitted.
    #[arg(long)]
    images: Option<PathBuf>,
    /// Number of synthetic inputs.
    #[arg(long)]
    inputs: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Hardware description recorded in the report.
    #[arg(long)]
    hardware: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stub_delay_ms: Option<u64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn default_hardware() -> String {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!("{}-{} ({threads} threads)", std::env::consts::ARCH, std::env::consts::OS)
}

pub fn execute(a: BenchArgs, cfg: &mut Resolver) -> Result<()> {
    if let Some(d) = &a.images {
        require_dir(d, "image directory")?;
    }
    if let Some(r) = &a.report {
        require_output(r)?;
    }
    let file = cfg.file.clone();
    let warmup = cfg.pick("warmup", a.warmup, file.warmup, 1);
    let repeats = cfg.pick("repeats", a.repeats, file.repeats, 5);
    let hardware = cfg.pick("hardware", a.hardware, file.hardware, default_hardware());
    let delay_ms = cfg.pick("stub_delay_ms", a.stub_delay_ms, file.stub_delay_ms, 0);
    let seed = cfg.seed(a.seed)?;
    let delay = super::delay(delay_ms);

    let (classifier, detector) = match (a.model.or(file.classifier), a.detector.or(file.detector)) {
        (Some(m), None) => (Some(backends::classifier(&m, maskwatch::data::CLASSIFIER_INPUT_SIDE, delay)?), None),
        (None, Some(d)) => (None, Some(backends::detector(&d, delay)?)),
        (None, None) => return Err(usage("give --model or --detector")),
        (Some(_), Some(_)) => return Err(usage("give only one of --model and --detector")),
    };
    let target = match (&classifier, &detector) {
        (Some(c), _) => BenchTarget::Classifier(c.as_ref()),
        (_, Some(d)) => BenchTarget::Detector(d.as_ref()),
        _ => unreachable!("one backend is set"),
    };
    cfg.note("backend", target.name());
    let side = classifier.as_ref().map_or(640, |c| c.input_side());

    let inputs: Vec<Image> = match &a.images {
        Some(dir) => image_files(dir)?
            .iter()
            .map(|p| {
                let img = load_image(p).with_context(|| p.display().to_string())?;
                Ok(if classifier.is_some() { resize_image(&img, side)? } else { img })
            })
            .collect::<Result<_>>()?,
        None => {
            let n = cfg.pick("inputs", a.inputs, file.inputs, 32);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| Image::from_fn(side, side, |_, _| std::array::from_fn(|_| rng.gen_range(0.0f32..255.0))))
                .collect()
        }
    };
    if inputs.is_empty() {
        return Err(usage("no benchmark inputs"));
    }
    let result = bench_inference(target, &inputs, warmup, repeats, &hardware)?;
    let mut report = MetricsReport::empty(if classifier.is_some() { Task::Classification } else { Task::Detection });
    report.inferences_per_sec = Some(result.inferences_per_sec);
    report.hardware = Some(result.hardware);
    report.notes = cfg.notes();
    report
        .notes
        .push(format!("pass rates: {}", result.pass_rates.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(" ")));
    eprintln!("{:.2} inferences/sec", result.inferences_per_sec);
    match a.report {
        Some(p) => Ok(write_report(&report, &p)?),
        None => emit_json(&report, None),
    }
}
