//! Supervised training and knowledge distillation for [`Cnn`].

#[cfg(feature = "native")]
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{cross_entropy_example, distill_example, DistillWeights};
use super::{argmax, Cnn, ClassifierBackend, Logits, NUM_CLASSES};
use crate::data::{augment_with_rng, AugmentationSpec, MaskClass};
#[cfg(feature = "native")]
use crate::data::{Manifest, Split};
use crate::error::{Error, Result};
use crate::image::Image;

/// Examples per gradient work unit. Fixed so the summation order (and so
/// the trained weights) does not depend on the thread count.
const GRAD_CHUNK: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    /// Raw `[0, 255]` pixels at the classifier input side.
    pub image: Image,
    pub label: MaskClass,
}

impl LabeledImage {
    pub fn new(image: Image, label: MaskClass) -> Self {
        Self { image, label }
    }
}

/// Loads one split of a classification manifest, resizing every image to `side`.
#[cfg(feature = "native")]
pub fn load_split(manifest: &Manifest, split: Split, root: &Path, side: usize) -> Result<Vec<LabeledImage>> {
    manifest
        .samples()?
        .into_iter()
        .filter(|s| s.split == split)
        .map(|s| {
            let img = crate::image::load_image(&root.join(&s.image_path))?;
            Ok(LabeledImage::new(crate::image::resize_image(&img, side)?, s.label))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub lr: f32,
    pub batch_size: usize,
    pub momentum: f32,
    pub seed: u64,
    /// Stop after the first epoch whose validation accuracy reaches this value.
    #[serde(default)]
    pub stop_at_val_accuracy: Option<f64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 10,
            lr: 0.01,
            batch_size: 32,
            momentum: 0.9,
            seed: 0,
            stop_at_val_accuracy: None,
        }
    }
}

impl TrainOptions {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::config(format!("learning rate {} must be finite and >= 0", self.lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-example loss over the epoch.
    pub train_loss: f64,
    /// Accuracy of the in-flight predictions made while training.
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub parameter_count: usize,
    pub teacher_parameter_count: Option<usize>,
    /// Student parameters as a fraction of teacher parameters.
    pub parameter_ratio: Option<f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

/// Fraction of `set` classified correctly.
pub fn accuracy(backend: &dyn ClassifierBackend, set: &[LabeledImage]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::invalid("accuracy of an empty set"));
    }
    let images: Vec<Image> = set.iter().map(|s| s.image.clone()).collect();
    let logits = backend.predict_logits(&images)?;
    let correct = logits.iter().zip(set).filter(|(z, s)| argmax(z) == s.label).count();
    Ok(correct as f64 / set.len() as f64)
}

/// Trains with softmax cross-entropy and SGD with momentum.
///
/// Only `train` is augmented; `val` is used for per-epoch accuracy. When
/// `augmentation` is given its normalization becomes the model's.
pub fn train_classifier(
    model: &mut Cnn,
    train: &[LabeledImage],
    val: &[LabeledImage],
    augmentation: Option<&AugmentationSpec>,
    opts: &TrainOptions,
) -> Result<TrainReport> {
    let loss = |_: usize, label: MaskClass, z: &Logits| cross_entropy_example(&widen(z), label.id() as usize);
    let epochs = run_epochs(model, train, val, augmentation, opts, &loss)?;
    Ok(TrainReport {
        epochs,
        parameter_count: model.parameter_count(),
        teacher_parameter_count: None,
        parameter_ratio: None,
        notes: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    pub temperature: f64,
    pub alpha: f64,
    pub epochs: usize,
    pub lr: f32,
    pub batch_size: usize,
    #[serde(default)]
    pub stop_at_val_accuracy: Option<f64>,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            temperature: 4.0,
            alpha: 0.1,
            epochs: 10,
            lr: 0.01,
            batch_size: 32,
            stop_at_val_accuracy: None,
        }
    }
}

impl DistillConfig {
    pub fn weights(&self) -> DistillWeights {
        DistillWeights {
            temperature: self.temperature,
            alpha: self.alpha,
        }
    }
}

/// Trains `student` against a frozen `teacher` with the soft-target loss.
///
/// Teacher logits are computed once per training image, on the
/// un-augmented image.
pub fn distill(
    student: &mut Cnn,
    teacher: &dyn ClassifierBackend,
    train: &[LabeledImage],
    val: &[LabeledImage],
    augmentation: Option<&AugmentationSpec>,
    cfg: &DistillConfig,
    seed: u64,
) -> Result<TrainReport> {
    let weights = cfg.weights();
    weights.validate()?;
    if train.is_empty() {
        return Err(Error::invalid("empty training split"));
    }
    if teacher.input_side() != student.input_side() {
        return Err(Error::config(format!(
            "teacher input side {} differs from student input side {}",
            teacher.input_side(),
            student.input_side()
        )));
    }
    let opts = TrainOptions {
        epochs: cfg.epochs,
        lr: cfg.lr,
        batch_size: cfg.batch_size,
        seed,
        stop_at_val_accuracy: cfg.stop_at_val_accuracy,
        ..TrainOptions::default()
    };
    opts.validate()?;
    let mut teacher_logits = Vec::with_capacity(train.len());
    for chunk in train.chunks(64) {
        let images: Vec<Image> = chunk.iter().map(|s| s.image.clone()).collect();
        let logits = teacher
            .predict_logits(&images)
            .map_err(|e| Error::backend(teacher.name(), e.to_string()))?;
        if logits.len() != chunk.len() || logits.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::backend(teacher.name(), "teacher returned malformed logits"));
        }
        teacher_logits.extend(logits);
    }
    let loss = |i: usize, label: MaskClass, z: &Logits| {
        distill_example(&widen(z), &widen(&teacher_logits[i]), label.id() as usize, &weights)
    };
    let epochs = run_epochs(student, train, val, augmentation, &opts, &loss)?;
    let teacher_params = teacher.parameter_count();
    Ok(TrainReport {
        epochs,
        parameter_count: student.parameter_count(),
        teacher_parameter_count: Some(teacher_params),
        parameter_ratio: (teacher_params > 0).then(|| student.parameter_count() as f64 / teacher_params as f64),
        notes: Vec::new(),
    })
}

fn widen(z: &Logits) -> [f64; NUM_CLASSES] {
    z.map(f64::from)
}

type ExampleLoss<'a> = dyn Fn(usize, MaskClass, &Logits) -> (f64, [f64; NUM_CLASSES]) + Sync + 'a;

struct ChunkResult {
    grad: Vec<f32>,
    loss: f64,
    correct: usize,
}

fn run_epochs(
    model: &mut Cnn,
    train: &[LabeledImage],
    val: &[LabeledImage],
    augmentation: Option<&AugmentationSpec>,
    opts: &TrainOptions,
    loss_fn: &ExampleLoss<'_>,
) -> Result<Vec<EpochRecord>> {
    opts.validate()?;
    if train.is_empty() {
        return Err(Error::invalid("empty training split"));
    }
    if let Some(aug) = augmentation {
        aug.validate()?;
        if aug.output_side != model.input_side() {
            return Err(Error::config(format!(
                "augmentation side {} differs from model input side {}",
                aug.output_side,
                model.input_side()
            )));
        }
    }
    if opts.epochs == 0 {
        return Ok(Vec::new());
    }
    if let Some(aug) = augmentation {
        model.set_normalization(aug.normalization);
    }

    let n_params = model.parameter_count();
    let mut velocity = vec![0.0f32; n_params];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut records = Vec::with_capacity(opts.epochs);

    for epoch in 0..opts.epochs {
        let started = Instant::now();
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng);
        let aug_seeds: Vec<u64> = order.iter().map(|_| rng.gen()).collect();

        let mut loss_sum = 0.0;
        let mut correct = 0;
        for (batch_no, (batch, seeds)) in order
            .chunks(opts.batch_size)
            .zip(aug_seeds.chunks(opts.batch_size))
            .enumerate()
        {
            let scale = 1.0 / batch.len() as f64;
            let model_ref: &Cnn = model;
            let work = |(idx, seed): (&[usize], &[u64])| -> Result<ChunkResult> {
                let mut grad = vec![0.0f32; n_params];
                let mut loss = 0.0;
                let mut correct = 0;
                for (&i, &s) in idx.iter().zip(seed) {
                    let sample = &train[i];
                    let input = match augmentation {
                        Some(aug) => augment_with_rng(&sample.image, aug, &mut ChaCha8Rng::seed_from_u64(s))?,
                        None => model_ref.normalization().normalize(&sample.image),
                    };
                    let (l, logits) = model_ref.accumulate_gradient(&input, &mut grad, |z| {
                        let (l, g) = loss_fn(i, sample.label, z);
                        (l, g.map(|v| v * scale))
                    })?;
                    loss += l;
                    correct += usize::from(argmax(&logits) == sample.label);
                }
                Ok(ChunkResult { grad, loss, correct })
            };
            let units: Vec<(&[usize], &[u64])> = batch.chunks(GRAD_CHUNK).zip(seeds.chunks(GRAD_CHUNK)).collect();
            #[cfg(feature = "native")]
            let results: Vec<ChunkResult> = {
                use rayon::prelude::*;
                units.into_par_iter().map(work).collect::<Result<_>>()?
            };
            #[cfg(not(feature = "native"))]
            let results: Vec<ChunkResult> = units.into_iter().map(work).collect::<Result<_>>()?;

            let mut results = results.into_iter();
            let first = results.next().expect("non-empty batch");
            let mut grad = first.grad;
            let mut batch_loss = first.loss;
            correct += first.correct;
            for r in results {
                grad.iter_mut().zip(&r.grad).for_each(|(a, b)| *a += b);
                batch_loss += r.loss;
                correct += r.correct;
            }
            if !batch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_no,
                    loss: batch_loss,
                });
            }
            loss_sum += batch_loss;

            let (lr, mu) = (opts.lr, opts.momentum);
            for ((p, v), g) in model.params_mut().iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = mu * *v + g;
                *p -= lr * *v;
            }
        }

        let val_accuracy = if val.is_empty() { None } else { Some(accuracy(model, val)?) };
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_accuracy: correct as f64 / train.len() as f64,
            val_accuracy,
            seconds: started.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}: loss {:.5} train acc {:.4} val acc {:?} ({:.1}s)",
            record.train_loss,
            record.train_accuracy,
            record.val_accuracy,
            record.seconds
        );
        let done = matches!((opts.stop_at_val_accuracy, record.val_accuracy), (Some(t), Some(v)) if v >= t);
        records.push(record);
        if done {
            break;
        }
    }
    Ok(records)
}
