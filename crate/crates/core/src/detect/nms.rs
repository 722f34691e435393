use super::{iou, Detection};

/// Order of detections by confidence, highest first, ties by input position.
fn confidence_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].conf.total_cmp(&dets[a].conf));
    order
}

/// Greedy class-wise non-maximum suppression.
///
/// Detections are visited by confidence (ties by input order); each kept
/// detection suppresses every later detection of the same class whose IoU
/// with it exceeds `iou_threshold`. Output is in visiting order.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let order = confidence_order(dets);
    let mut suppressed = vec![false; dets.len()];
    let mut kept = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        kept.push(dets[i]);
        for &j in &order[rank + 1..] {
            if !suppressed[j] && dets[j].cls == dets[i].cls && iou(&dets[i], &dets[j]) > iou_threshold {
                suppressed[j] = true;
            }
        }
    }
    kept
}
