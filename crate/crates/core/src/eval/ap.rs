use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::BBox;
use crate::detect::{iou, Detection};
use crate::error::{Error, Result};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// `(recall, precision)` after each detection, in descending confidence order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<(f64, f64)>,
    pub ground_truths: usize,
}

impl PrCurve {
    /// Area under the precision envelope: each precision is replaced by the
    /// best precision at any equal or higher recall, then summed over the
    /// recall increments.
    pub fn average_precision(&self) -> f64 {
        let mut envelope: Vec<f64> = self.points.iter().map(|p| p.1).collect();
        for i in (0..envelope.len().saturating_sub(1)).rev() {
            envelope[i] = envelope[i].max(envelope[i + 1]);
        }
        let mut ap = 0.0;
        let mut prev_recall = 0.0;
        for (&(recall, _), &precision) in self.points.iter().zip(&envelope) {
            ap += (recall - prev_recall) * precision;
            prev_recall = recall;
        }
        ap
    }
}

fn check_threshold(iou_thr: f64) -> Result<()> {
    if !(iou_thr > 0.0 && iou_thr < 1.0) {
        return Err(Error::invalid(format!("IoU threshold {iou_thr} outside (0, 1)")));
    }
    Ok(())
}

/// PR curve for class `cls`, or `None` when it has no ground truth.
///
/// Detections are visited by confidence, highest first, ties in input
/// order. Each one claims the unmatched ground-truth box of the same image
/// and class with the highest IoU at or above `iou_thr` (ties to the
/// earlier box); otherwise it is a false positive.
pub fn pr_curve(
    dets: &[(String, Detection)],
    gts: &[(String, BBox)],
    cls: u32,
    iou_thr: f64,
) -> Result<Option<PrCurve>> {
    check_threshold(iou_thr)?;
    let truths: Vec<&(String, BBox)> = gts.iter().filter(|(_, b)| b.cls == cls).collect();
    if truths.is_empty() {
        return Ok(None);
    }
    let mut ours: Vec<&(String, Detection)> = dets.iter().filter(|(_, d)| d.cls == cls).collect();
    if let Some((_, bad)) = ours.iter().find(|(_, d)| !d.conf.is_finite()) {
        return Err(Error::invalid(format!("detection with non-finite confidence {bad:?}")));
    }
    ours.sort_by(|a, b| b.1.conf.total_cmp(&a.1.conf));

    let mut matched = vec![false; truths.len()];
    let mut tp = 0usize;
    let mut points = Vec::with_capacity(ours.len());
    for (rank, (image, det)) in ours.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (g, (gimage, gt)) in truths.iter().enumerate() {
            if matched[g] || gimage != image {
                continue;
            }
            let overlap = iou(det, gt);
            if overlap >= iou_thr && best.map_or(true, |(_, o)| overlap > o) {
                best = Some((g, overlap));
            }
        }
        if let Some((g, _)) = best {
            matched[g] = true;
            tp += 1;
        }
        points.push((tp as f64 / truths.len() as f64, tp as f64 / (rank + 1) as f64));
    }
    Ok(Some(PrCurve {
        points,
        ground_truths: truths.len(),
    }))
}

/// Average precision of class `cls`; `None` when it has no ground truth.
pub fn ap_at_iou(dets: &[(String, Detection)], gts: &[(String, BBox)], cls: u32, iou_thr: f64) -> Result<Option<f64>> {
    Ok(pr_curve(dets, gts, cls, iou_thr)?.map(|c| c.average_precision()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub per_class: BTreeMap<u32, Option<f64>>,
    pub mean: f64,
}

/// Arithmetic mean of the defined per-class values.
pub fn mean_ap(per_class: &[Option<f64>]) -> Result<f64> {
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::invalid("no class has ground truth, mAP is undefined"));
    }
    Ok(present.iter().sum::<f64>() / present.len() as f64)
}

/// Per-class AP and their class mean, skipping classes without ground truth.
pub fn map_at_iou(
    dets: &[(String, Detection)],
    gts: &[(String, BBox)],
    classes: &[u32],
    iou_thr: f64,
) -> Result<MapResult> {
    let mut per_class = BTreeMap::new();
    for &c in classes {
        per_class.insert(c, ap_at_iou(dets, gts, c, iou_thr)?);
    }
    let values: Vec<Option<f64>> = per_class.values().copied().collect();
    let mean = mean_ap(&values)?;
    Ok(MapResult { per_class, mean })
}
