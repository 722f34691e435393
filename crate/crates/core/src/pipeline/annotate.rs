use super::{FrameClass, FrameResult, Palette};
use crate::image::Image;

/// 3×5 glyphs, one row per `u8` (low three bits, MSB on the left).
fn glyph(c: char) -> Option<[u8; 5]> {
    Some(match c {
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b111, 0b001, 0b111, 0b100, 0b111],
        '3' => [0b111, 0b001, 0b111, 0b001, 0b111],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b111, 0b001, 0b111],
        '6' => [0b111, 0b100, 0b111, 0b101, 0b111],
        '7' => [0b111, 0b001, 0b010, 0b010, 0b010],
        '8' => [0b111, 0b101, 0b111, 0b101, 0b111],
        '9' => [0b111, 0b101, 0b111, 0b001, 0b111],
        '.' => [0b000, 0b000, 0b000, 0b000, 0b010],
        '%' => [0b101, 0b001, 0b010, 0b100, 0b101],
        _ => return None,
    })
}

fn put(img: &mut Image, x: i64, y: i64, rgb: [f32; 3]) {
    if x >= 0 && y >= 0 && (x as usize) < img.width() && (y as usize) < img.height() {
        img.set_pixel(x as usize, y as usize, rgb);
    }
}

/// Outline of the pixel rectangle `[x0, x1) × [y0, y1)`, clipped to the image.
pub fn draw_rect(img: &mut Image, x0: i64, y0: i64, x1: i64, y1: i64, rgb: [f32; 3], thickness: i64) {
    for t in 0..thickness {
        for x in x0..x1 {
            put(img, x, y0 + t, rgb);
            put(img, x, y1 - 1 - t, rgb);
        }
        for y in y0..y1 {
            put(img, x0 + t, y, rgb);
            put(img, x1 - 1 - t, y, rgb);
        }
    }
}

/// Renders digits, `.` and `%` with the top-left corner at `(x, y)`;
/// other characters advance the cursor without drawing.
pub fn draw_text(img: &mut Image, x: i64, y: i64, text: &str, rgb: [f32; 3], scale: i64) {
    let mut cursor = x;
    for c in text.chars() {
        if let Some(rows) = glyph(c) {
            for (row, bits) in rows.iter().enumerate() {
                for col in 0..3 {
                    if bits >> (2 - col) & 1 == 1 {
                        for dy in 0..scale {
                            for dx in 0..scale {
                                put(img, cursor + col * scale + dx, y + row as i64 * scale + dy, rgb);
                            }
                        }
                    }
                }
            }
        }
        cursor += 4 * scale;
    }
}

/// Copy of `frame` with each detection outlined in its class color and
/// labelled with its confidence.
pub fn annotate_frame(frame: &Image, result: &FrameResult, palette: &Palette) -> Image {
    let mut out = frame.clone();
    let (w, h) = (frame.width() as f64, frame.height() as f64);
    let scale = ((frame.width().min(frame.height()) / 160) as i64).max(1);
    for d in &result.detections {
        let color = match d.class {
            FrameClass::Mask(c) => palette.mask[c.id() as usize],
            FrameClass::Det(c) => palette.det[c.id() as usize],
        }
        .map(f32::from);
        let b = &d.bbox;
        let (x0, y0) = ((b.x_min() * w).round() as i64, (b.y_min() * h).round() as i64);
        let (x1, y1) = ((b.x_max() * w).round() as i64, (b.y_max() * h).round() as i64);
        draw_rect(&mut out, x0, y0, x1, y1, color, scale * 2);
        let label = format!("{:.2}", d.conf);
        let text_y = if y0 >= 6 * scale + 1 { y0 - 6 * scale } else { y1 + scale };
        draw_text(&mut out, x0, text_y, &label, color, scale);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{BBox, MaskClass};
    use crate::pipeline::FrameDetection;

    #[test]
    fn outline_hits_box_edges_only() {
        let frame = Image::filled(20, 20, [0.0; 3]);
        let result = FrameResult {
            frame_index: 0,
            detections: vec![FrameDetection {
                bbox: BBox::new(0.5, 0.5, 0.5, 0.5, 2, 0.5),
                class: FrameClass::Mask(MaskClass::None),
                conf: 0.5,
            }],
            latency_ms: 1.0,
        };
        let palette = Palette::default();
        let out = annotate_frame(&frame, &result, &palette);
        let red = palette.mask[2].map(f32::from);
        assert_eq!(out.pixel(5, 5), red);
        assert_eq!(out.pixel(14, 14), red);
        assert_eq!(out.pixel(10, 10), [0.0; 3]);
        assert_eq!(out.pixel(19, 0), [0.0; 3]);
    }

    #[test]
    fn text_is_clipped_at_borders() {
        let mut img = Image::filled(6, 6, [0.0; 3]);
        draw_text(&mut img, 4, -2, "8.8", [255.0; 3], 1);
        draw_rect(&mut img, -5, -5, 50, 50, [9.0; 3], 1);
        assert!(img.data().iter().any(|&v| v == 255.0));
    }
}
