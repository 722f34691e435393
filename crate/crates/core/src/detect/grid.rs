//! Decoding of single-shot grid detector output.
//!
//! The image is divided into an `S x S` grid. Each cell predicts `B` boxes
//! `(tx, ty, tw, th, conf)` and one distribution over `C` classes. `tx, ty`
//! are offsets inside the cell; `tw, th` are fractions of the whole image.

use super::Detection;
use crate::data::BBox;
use crate::error::{Error, Result};

const PROB_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutput {
    s: usize,
    b: usize,
    c: usize,
    values: Vec<f64>,
}

impl GridOutput {
    /// `values` is laid out row-major as `S x S x (B*5 + C)`, rows first.
    /// Values must already be activated.
    pub fn new(s: usize, b: usize, c: usize, values: Vec<f64>) -> Result<Self> {
        if s == 0 || b == 0 || c == 0 {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        let depth = b * 5 + c;
        if values.len() != s * s * depth {
            return Err(Error::invalid(format!(
                "grid tensor has {} values, expected {s}x{s}x{depth}",
                values.len()
            )));
        }
        let grid = Self { s, b, c, values };
        grid.validate()?;
        Ok(grid)
    }

    /// Applies sigmoid to every box value and softmax to each cell's class scores.
    pub fn from_logits(s: usize, b: usize, c: usize, mut logits: Vec<f64>) -> Result<Self> {
        let depth = b * 5 + c;
        if s == 0 || b == 0 || c == 0 || logits.len() != s * s * depth {
            return Err(Error::invalid("grid logits have the wrong shape"));
        }
        for cell in logits.chunks_exact_mut(depth) {
            let (boxes, classes) = cell.split_at_mut(b * 5);
            for v in boxes.iter_mut() {
                *v = 1.0 / (1.0 + (-*v).exp());
            }
            let max = classes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for v in classes.iter_mut() {
                *v = (*v - max).exp();
                total += *v;
            }
            classes.iter_mut().for_each(|v| *v /= total);
        }
        Self::new(s, b, c, logits)
    }

    pub fn side(&self) -> usize {
        self.s
    }

    pub fn boxes_per_cell(&self) -> usize {
        self.b
    }

    pub fn classes(&self) -> usize {
        self.c
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn depth(&self) -> usize {
        self.b * 5 + self.c
    }

    /// Values for cell `(row, col)`.
    pub fn cell(&self, row: usize, col: usize) -> &[f64] {
        let d = self.depth();
        let start = (row * self.s + col) * d;
        &self.values[start..start + d]
    }

    fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        for row in 0..self.s {
            for col in 0..self.s {
                let cell = self.cell(row, col);
                let (boxes, classes) = cell.split_at(self.b * 5);
                if !boxes.iter().all(|&v| unit(v)) {
                    return Err(Error::invalid(format!(
                        "cell ({row}, {col}) has box values outside [0, 1]; activate first"
                    )));
                }
                if !classes.iter().all(|&v| unit(v)) {
                    return Err(Error::invalid(format!("cell ({row}, {col}) has class probabilities outside [0, 1]")));
                }
                let total: f64 = classes.iter().sum();
                if (total - 1.0).abs() > PROB_TOLERANCE {
                    return Err(Error::invalid(format!(
                        "cell ({row}, {col}) class probabilities sum to {total}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Decodes every box whose final confidence (box confidence times the cell's
/// highest class probability) reaches `conf_threshold`.
///
/// Boxes are clipped to the unit image; boxes with nothing left are skipped.
pub fn decode_grid(out: &GridOutput, conf_threshold: f64) -> Result<Vec<Detection>> {
    if !(0.0..=1.0).contains(&conf_threshold) {
        return Err(Error::config(format!("confidence threshold {conf_threshold} outside [0, 1]")));
    }
    let s = out.s as f64;
    let mut dets = Vec::new();
    for row in 0..out.s {
        for col in 0..out.s {
            let cell = out.cell(row, col);
            let (boxes, classes) = cell.split_at(out.b * 5);
            let (cls, best) = classes
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
            for pred in boxes.chunks_exact(5) {
                let &[tx, ty, tw, th, conf] = pred else { unreachable!() };
                let score = conf * best;
                if score < conf_threshold {
                    continue;
                }
                let raw = BBox::new((col as f64 + tx) / s, (row as f64 + ty) / s, tw, th, cls as u32, score);
                if let Some(b) = raw.clip_to_unit() {
                    dets.push(b);
                }
            }
        }
    }
    Ok(dets)
}
