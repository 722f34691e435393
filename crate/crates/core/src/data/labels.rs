//! Per-image box label files: one `<class_id> <cx> <cy> <w> <h>` line per box.

use std::fmt::Write as _;
use std::path::Path;

use super::BBox;
use crate::error::{Error, Result};

pub fn format_box_line(b: &BBox) -> String {
    format!("{} {:.6} {:.6} {:.6} {:.6}", b.cls, b.cx, b.cy, b.w, b.h)
}

pub fn format_box_file(boxes: &[BBox]) -> String {
    let mut out = String::new();
    for b in boxes {
        let _ = writeln!(out, "{}", format_box_line(b));
    }
    out
}

/// Parses label-file text. Blank lines are skipped; line numbers in errors are 1-based.
pub fn parse_box_file(text: &str) -> Result<Vec<BBox>> {
    let mut boxes = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let cls = fields[0].parse::<u32>().map_err(|e| Error::Parse {
            line: line_no,
            message: format!("class id `{}`: {e}", fields[0]),
        })?;
        let mut nums = [0.0f64; 4];
        for (slot, field) in nums.iter_mut().zip(&fields[1..]) {
            *slot = field.parse().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("number `{field}`: {e}"),
            })?;
        }
        let b = BBox::ground_truth(cls, nums[0], nums[1], nums[2], nums[3]);
        b.validate().map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        boxes.push(b);
    }
    Ok(boxes)
}

pub fn read_box_file(path: &Path) -> Result<Vec<BBox>> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    parse_box_file(&std::fs::read_to_string(path)?)
}

pub fn write_box_file(path: &Path, boxes: &[BBox]) -> Result<()> {
    std::fs::write(path, format_box_file(boxes))?;
    Ok(())
}
