//! Browser bindings for box suppression, grid decoding and PR curves.
//!
//! Every export takes and returns JSON or plain text so the page needs no
//! generated TypeScript types. The `*_json` functions hold the logic and are
//! what the native tests call.

use maskwatch::data::BBox;
use maskwatch::detect::interchange::{parse_detections, parse_ground_truth};
use maskwatch::detect::{decode_grid, iou, nms, GridOutput};
use maskwatch::eval::pr_curve;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize, Deserialize)]
pub struct Suppressed {
    pub kept: Vec<BBox>,
    /// Index into the input for each kept box.
    pub kept_index: Vec<usize>,
    pub iou: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
pub struct GridRequest {
    pub s: usize,
    pub b: usize,
    pub c: usize,
    pub logits: Vec<f64>,
    pub conf: f64,
    pub nms: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Decoded {
    pub raw: Vec<BBox>,
    pub kept: Vec<BBox>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Curve {
    pub cls: u32,
    pub ground_truths: usize,
    pub points: Vec<(f64, f64)>,
    pub ap: f64,
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn suppress_json(boxes: &str, iou_threshold: f64) -> Result<String, String> {
    let boxes: Vec<BBox> = serde_json::from_str(boxes).map_err(|e| format!("boxes: {e}"))?;
    for b in &boxes {
        b.validate().map_err(|e| e.to_string())?;
    }
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(format!("IoU threshold {iou_threshold} outside [0, 1]"));
    }
    let kept = nms(&boxes, iou_threshold);
    let mut used = vec![false; boxes.len()];
    let mut kept_index = Vec::with_capacity(kept.len());
    for k in &kept {
        let i = (0..boxes.len()).find(|&i| !used[i] && boxes[i] == *k).expect("kept boxes come from the input");
        used[i] = true;
        kept_index.push(i);
    }
    let iou = boxes.iter().map(|a| boxes.iter().map(|b| iou(a, b)).collect()).collect();
    to_json(&Suppressed { kept, kept_index, iou })
}

pub fn decode_json(request: &str) -> Result<String, String> {
    let r: GridRequest = serde_json::from_str(request).map_err(|e| format!("request: {e}"))?;
    let grid = GridOutput::from_logits(r.s, r.b, r.c, r.logits).map_err(|e| e.to_string())?;
    let raw = decode_grid(&grid, r.conf).map_err(|e| e.to_string())?;
    let kept = nms(&raw, r.nms);
    to_json(&Decoded { raw, kept })
}

/// `dets` and `gts` use the detection interchange text format.
pub fn curves_json(dets: &str, gts: &str, iou_threshold: f64) -> Result<String, String> {
    let dets = parse_detections(dets).map_err(|e| format!("detections: {e}"))?;
    let gts = parse_ground_truth(gts).map_err(|e| format!("ground truth: {e}"))?;
    let mut classes: Vec<u32> = gts.iter().map(|(_, b)| b.cls).collect();
    classes.sort_unstable();
    classes.dedup();
    let mut curves = Vec::new();
    for cls in classes {
        if let Some(c) = pr_curve(&dets, &gts, cls, iou_threshold).map_err(|e| e.to_string())? {
            curves.push(Curve {
                cls,
                ground_truths: c.ground_truths,
                ap: c.average_precision(),
                points: c.points,
            });
        }
    }
    to_json(&curves)
}

#[wasm_bindgen]
pub fn suppress(boxes: &str, iou_threshold: f64) -> Result<String, JsValue> {
    suppress_json(boxes, iou_threshold).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn decode(request: &str) -> Result<String, JsValue> {
    decode_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn curves(dets: &str, gts: &str, iou_threshold: f64) -> Result<String, JsValue> {
    curves_json(dets, gts, iou_threshold).map_err(|e| JsValue::from_str(&e))
}
