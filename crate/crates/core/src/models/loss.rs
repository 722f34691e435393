//! Softmax cross-entropy and soft-target distillation losses.
//!
//! All losses are batch means and come with their gradient with respect to
//! the (student) logits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn softmax<const K: usize>(logits: &[f64; K]) -> [f64; K] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; K];
    let mut total = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
    out
}

pub fn log_softmax<const K: usize>(logits: &[f64; K]) -> [f64; K] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.map(|z| z - lse)
}

fn scaled<const K: usize>(logits: &[f64; K], temperature: f64) -> [f64; K] {
    logits.map(|z| z / temperature)
}

/// Mixing weights for soft-target distillation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistillWeights {
    pub temperature: f64,
    /// Weight of the hard-label cross-entropy term.
    pub alpha: f64,
}

impl DistillWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::config(format!("temperature must be > 0, got {}", self.temperature)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Per-example cross-entropy and its gradient.
pub fn cross_entropy_example<const K: usize>(logits: &[f64; K], label: usize) -> (f64, [f64; K]) {
    let mut grad = softmax(logits);
    let loss = -log_softmax(logits)[label];
    grad[label] -= 1.0;
    (loss, grad)
}

/// Per-example distillation loss
/// `alpha * CE(s, y) + (1 - alpha) * T^2 * KL(softmax(t/T) || softmax(s/T))`
/// and its gradient with respect to the student logits `s`.
pub fn distill_example<const K: usize>(
    student: &[f64; K],
    teacher: &[f64; K],
    label: usize,
    w: &DistillWeights,
) -> (f64, [f64; K]) {
    let t = w.temperature;
    let (mut loss, mut grad) = if w.alpha > 0.0 {
        let (ce, g) = cross_entropy_example(student, label);
        (w.alpha * ce, g.map(|v| w.alpha * v))
    } else {
        (0.0, [0.0; K])
    };
    if w.alpha < 1.0 {
        let log_p = log_softmax(&scaled(teacher, t));
        let log_q = log_softmax(&scaled(student, t));
        let kl: f64 = log_p
            .iter()
            .zip(&log_q)
            .map(|(&lp, &lq)| if lp == f64::NEG_INFINITY { 0.0 } else { lp.exp() * (lp - lq) })
            .sum::<f64>()
            .max(0.0);
        let soft = 1.0 - w.alpha;
        loss += soft * t * t * kl;
        for i in 0..K {
            grad[i] += soft * t * (log_q[i].exp() - log_p[i].exp());
        }
    }
    (loss, grad)
}

fn check_batch(n_student: usize, n_other: usize, what: &str) -> Result<()> {
    if n_student != n_other {
        return Err(Error::invalid(format!(
            "batch size mismatch: {n_student} student rows vs {n_other} {what}"
        )));
    }
    if n_student == 0 {
        return Err(Error::invalid("empty batch"));
    }
    Ok(())
}

fn check_labels<const K: usize>(labels: &[usize]) -> Result<()> {
    match labels.iter().find(|&&y| y >= K) {
        Some(y) => Err(Error::invalid(format!("label {y} out of range 0..{K}"))),
        None => Ok(()),
    }
}

/// Mean cross-entropy of softmax(logits) against hard labels.
pub fn cross_entropy<const K: usize>(logits: &[[f64; K]], labels: &[usize]) -> Result<f64> {
    check_batch(logits.len(), labels.len(), "labels")?;
    check_labels::<K>(labels)?;
    let total: f64 = logits
        .iter()
        .zip(labels)
        .map(|(z, &y)| cross_entropy_example(z, y).0)
        .sum();
    Ok(total / logits.len() as f64)
}

/// Batch-mean distillation loss.
pub fn distill_loss<const K: usize>(
    student: &[[f64; K]],
    teacher: &[[f64; K]],
    labels: &[usize],
    w: &DistillWeights,
) -> Result<f64> {
    Ok(distill_loss_with_grad(student, teacher, labels, w)?.0)
}

/// Batch-mean distillation loss and its gradient for every student row.
pub fn distill_loss_with_grad<const K: usize>(
    student: &[[f64; K]],
    teacher: &[[f64; K]],
    labels: &[usize],
    w: &DistillWeights,
) -> Result<(f64, Vec<[f64; K]>)> {
    w.validate()?;
    check_batch(student.len(), teacher.len(), "teacher rows")?;
    check_batch(student.len(), labels.len(), "labels")?;
    check_labels::<K>(labels)?;
    let n = student.len() as f64;
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(student.len());
    for ((s, t), &y) in student.iter().zip(teacher).zip(labels) {
        let (l, g) = distill_example(s, t, y, w);
        total += l;
        grads.push(g.map(|v| v / n));
    }
    Ok((total / n, grads))
}
