use crate::data::BBox;
use crate::error::{Error, Result};
use crate::image::{resize_to, Image};

/// Pixel bounds `(x0, y0, x1, y1)`, end-exclusive, of `bbox` grown by
/// `margin` of its size on each side and clipped to a `width`×`height` frame.
pub fn crop_region(bbox: &BBox, margin: f64, width: usize, height: usize) -> Result<(usize, usize, usize, usize)> {
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(Error::invalid(format!("crop margin {margin} must be >= 0")));
    }
    let coords = [bbox.cx, bbox.cy, bbox.w, bbox.h];
    if coords.iter().any(|v| !v.is_finite()) || bbox.w <= 0.0 || bbox.h <= 0.0 {
        return Err(Error::invalid(format!("degenerate face box {bbox:?}")));
    }
    if bbox.x_max() <= 0.0 || bbox.y_max() <= 0.0 || bbox.x_min() >= 1.0 || bbox.y_min() >= 1.0 {
        return Err(Error::invalid(format!("face box {bbox:?} lies outside the frame")));
    }
    let half_w = bbox.w * (0.5 + margin);
    let half_h = bbox.h * (0.5 + margin);
    let to_px = |v: f64, extent: usize, round_up: bool| {
        let p = (v * extent as f64).clamp(0.0, extent as f64);
        // Tolerate float noise so exact pixel edges do not grow a column.
        let p = if round_up { (p - 1e-9).ceil() } else { (p + 1e-9).floor() };
        p.clamp(0.0, extent as f64) as usize
    };
    let x0 = to_px(bbox.cx - half_w, width, false);
    let x1 = to_px(bbox.cx + half_w, width, true);
    let y0 = to_px(bbox.cy - half_h, height, false);
    let y1 = to_px(bbox.cy + half_h, height, true);
    if x1 <= x0 || y1 <= y0 {
        return Err(Error::invalid(format!("face box {bbox:?} covers no pixels")));
    }
    Ok((x0, y0, x1, y1))
}

/// Crops the margin-expanded face and stretches it to `side`×`side`.
pub fn crop_face(frame: &Image, bbox: &BBox, margin: f64, side: usize) -> Result<Image> {
    let (x0, y0, x1, y1) = crop_region(bbox, margin, frame.width(), frame.height())?;
    let region = frame.crop(x0, y0, x1 - x0, y1 - y0)?;
    resize_to(&region, side, side)
}
