//! Plain-text detection and ground-truth files.
//!
//! Detections: `<image_id> <class_id> <conf> <cx> <cy> <w> <h>` per line.
//! Ground truth: `<image_id> <class_id> <cx> <cy> <w> <h>` per line.
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::Detection;
use crate::data::BBox;
use crate::error::{Error, Result};

pub type Labeled = (String, BBox);

pub fn parse_detections(text: &str) -> Result<Vec<Labeled>> {
    parse_lines(text, 7, |id, cls, nums| {
        (id, BBox::new(nums[1], nums[2], nums[3], nums[4], cls, nums[0]))
    })
}

pub fn parse_ground_truth(text: &str) -> Result<Vec<Labeled>> {
    parse_lines(text, 6, |id, cls, nums| {
        (id, BBox::ground_truth(cls, nums[0], nums[1], nums[2], nums[3]))
    })
}

fn parse_lines(
    text: &str,
    fields_expected: usize,
    build: impl Fn(String, u32, &[f64]) -> Labeled,
) -> Result<Vec<Labeled>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let err = |message: String| Error::Parse { line: line_no, message };
        if fields.len() != fields_expected {
            return Err(err(format!("expected {fields_expected} fields, found {}", fields.len())));
        }
        let cls: u32 = fields[1]
            .parse()
            .map_err(|e| err(format!("class id `{}`: {e}", fields[1])))?;
        let nums = fields[2..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| err(format!("number `{f}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        let (id, b) = build(fields[0].to_string(), cls, &nums);
        b.validate().map_err(|e| err(e.to_string()))?;
        out.push((id, b));
    }
    Ok(out)
}

pub fn format_detections(dets: &[(String, Detection)]) -> String {
    let mut out = String::new();
    for (id, d) in dets {
        let _ = writeln!(out, "{id} {} {:.6} {:.6} {:.6} {:.6} {:.6}", d.cls, d.conf, d.cx, d.cy, d.w, d.h);
    }
    out
}

pub fn format_ground_truth(gts: &[(String, BBox)]) -> String {
    let mut out = String::new();
    for (id, b) in gts {
        let _ = writeln!(out, "{id} {} {:.6} {:.6} {:.6} {:.6}", b.cls, b.cx, b.cy, b.w, b.h);
    }
    out
}

pub fn read_detections(path: &Path) -> Result<Vec<Labeled>> {
    parse_detections(&read(path)?)
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<Labeled>> {
    parse_ground_truth(&read(path)?)
}

fn read(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    Ok(std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detection_lines() {
        let text = "# frame detections\nimg1 0 0.9 0.5 0.5 0.2 0.2\n\nimg2 1 0.25 0.1 0.1 0.2 0.2\n";
        let dets = parse_detections(text).unwrap();
        assert_eq!(dets.len(), 2);
        assert_eq!(dets[0], ("img1".to_string(), BBox::new(0.5, 0.5, 0.2, 0.2, 0, 0.9)));
        assert_eq!(parse_detections(&format_detections(&dets)).unwrap(), dets);
    }

    #[test]
    fn ground_truth_lines() {
        let gts = parse_ground_truth("a 1 0.5 0.5 0.2 0.2").unwrap();
        assert_eq!(gts[0].1, BBox::ground_truth(1, 0.5, 0.5, 0.2, 0.2));
        assert_eq!(parse_ground_truth(&format_ground_truth(&gts)).unwrap(), gts);
    }

    #[test]
    fn malformed_lines_name_the_line() {
        assert!(matches!(
            parse_detections("a 0 0.9 0.5 0.5 0.2 0.2\nb 0 0.5 0.5 0.2 0.2"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_ground_truth("a x 0.5 0.5 0.2 0.2"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_detections("a 0 1.9 0.5 0.5 0.2 0.2"),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
