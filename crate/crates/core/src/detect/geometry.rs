use crate::data::BBox;

/// Intersection over union in normalized coordinates.
///
/// Zero-area boxes yield 0 (with a warning) rather than an error.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    // Areas from corner differences so that iou(a, a) is exactly 1.
    let corner_area = |r: &BBox| (r.x_max() - r.x_min()).max(0.0) * (r.y_max() - r.y_min()).max(0.0);
    let (area_a, area_b) = (corner_area(a), corner_area(b));
    if area_a <= 0.0 || area_b <= 0.0 {
        log::warn!("iou on zero-area box: {a:?} / {b:?}");
        return 0.0;
    }
    let iw = (a.x_max().min(b.x_max()) - a.x_min().max(b.x_min())).max(0.0);
    let ih = (a.y_max().min(b.y_max()) - a.y_min().max(b.y_min())).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = area_a + area_b - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gt(cx: f64, cy: f64, w: f64, h: f64) -> BBox {
        BBox::ground_truth(0, cx, cy, w, h)
    }

    #[test]
    fn identity() {
        let a = gt(0.3, 0.6, 0.2, 0.4);
        assert_eq!(iou(&a, &a), 1.0);
    }

    #[test]
    fn disjoint() {
        assert_eq!(iou(&gt(0.2, 0.5, 0.2, 0.2), &gt(0.8, 0.5, 0.2, 0.2)), 0.0);
    }

    #[test]
    fn half_width_offset_is_one_third() {
        // intersection 0.1 * 0.2 = 0.02, union 0.04 + 0.04 - 0.02 = 0.06
        let v = iou(&gt(0.4, 0.5, 0.2, 0.2), &gt(0.5, 0.5, 0.2, 0.2));
        assert!((v - 1.0 / 3.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn zero_area_is_zero() {
        let z = BBox::new(0.5, 0.5, 0.0, 0.2, 0, 1.0);
        assert_eq!(iou(&z, &z), 0.0);
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (0.01f64..0.6, 0.01f64..0.6, 0.0f64..1.0, 0.0f64..1.0)
            .prop_map(|(w, h, u, v)| gt(w / 2.0 + u * (1.0 - w), h / 2.0 + v * (1.0 - h), w, h))
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let ab = iou(&a, &b);
            prop_assert_eq!(ab, iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(iou(&a, &a), 1.0);
        }
    }
}
