use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use super::Logits;
use crate::data::MaskClass;
use crate::error::Result;
use crate::image::Image;

/// A mask-wearing classifier over square RGB crops.
///
/// Inputs are raw `[0, 255]` images of side [`input_side`](Self::input_side);
/// each implementation applies its own normalization. Output order matches
/// input order and every logit is finite. Implementations must allow
/// concurrent `predict_logits` calls.
pub trait ClassifierBackend: Send + Sync {
    fn name(&self) -> &str;

    fn input_side(&self) -> usize;

    fn predict_logits(&self, batch: &[Image]) -> Result<Vec<Logits>>;

    fn parameter_count(&self) -> usize;
}

pub fn argmax(logits: &Logits) -> MaskClass {
    let mut best = 0;
    for (i, v) in logits.iter().enumerate() {
        if *v > logits[best] {
            best = i;
        }
    }
    MaskClass::ALL[best]
}

pub fn softmax_f32(logits: &Logits) -> Logits {
    let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let exp = logits.map(|z| (z - max).exp());
    let total: f32 = exp.iter().sum();
    exp.map(|e| e / total)
}

/// Predicted class per image.
pub fn predict_classes(backend: &dyn ClassifierBackend, images: &[Image]) -> Result<Vec<MaskClass>> {
    Ok(backend.predict_logits(images)?.iter().map(argmax).collect())
}

/// Returns the same logits for every input. Useful for wiring tests and
/// latency emulation.
#[derive(Debug)]
pub struct FixedClassifier {
    name: String,
    logits: Logits,
    input_side: usize,
    delay: Duration,
    calls: AtomicUsize,
    images_seen: AtomicUsize,
}

impl FixedClassifier {
    pub fn new(name: impl Into<String>, logits: Logits, input_side: usize) -> Self {
        Self {
            name: name.into(),
            logits,
            input_side,
            delay: Duration::ZERO,
            calls: AtomicUsize::new(0),
            images_seen: AtomicUsize::new(0),
        }
    }

    /// Logits strongly favoring `class`.
    pub fn favoring(class: MaskClass, input_side: usize) -> Self {
        let mut logits = [0.0; 3];
        logits[class.id() as usize] = 4.0;
        Self::new(format!("fixed-{class}"), logits, input_side)
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn images_seen(&self) -> usize {
        self.images_seen.load(Ordering::SeqCst)
    }
}

impl ClassifierBackend for FixedClassifier {
    fn name(&self) -> &str {
        &self.name
    }

    fn input_side(&self) -> usize {
        self.input_side
    }

    fn predict_logits(&self, batch: &[Image]) -> Result<Vec<Logits>> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.images_seen.fetch_add(batch.len(), Ordering::SeqCst);
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay * batch.len() as u32);
        }
        Ok(vec![self.logits; batch.len()])
    }

    fn parameter_count(&self) -> usize {
        0
    }
}
