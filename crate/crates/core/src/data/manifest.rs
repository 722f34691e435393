//! Line-delimited JSON dataset manifests.
//!
//! The first record is a header `{"seed": N}`; every following record is an
//! entry with `path`, `split` and either `label` (0-2) or `boxes`
//! (`[class, cx, cy, w, h]` lists).

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BBox, MaskClass, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Annotation {
    Label(MaskClass),
    Boxes(Vec<BBox>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: String,
    pub split: Split,
    pub annotation: Annotation,
}

/// A labeled classification image.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image_path: PathBuf,
    pub label: MaskClass,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    seed: u64,
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(seed: u64, entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if e.path.is_empty() {
                return Err(Error::Validation("manifest entry with empty path".into()));
            }
            if !seen.insert(e.path.as_str()) {
                return Err(Error::Validation(format!("duplicate manifest path `{}`", e.path)));
            }
            if let Annotation::Boxes(boxes) = &e.annotation {
                for b in boxes {
                    b.validate()?;
                }
            }
        }
        Ok(Self { seed, entries })
    }

    pub fn empty() -> Self {
        Self {
            seed: 0,
            entries: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries_in(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn split_counts(&self) -> (usize, usize, usize) {
        let count = |s| self.entries_in(s).count();
        (count(Split::Train), count(Split::Val), count(Split::Test))
    }

    /// Classification samples, in manifest order. Fails on box-annotated entries.
    pub fn samples(&self) -> Result<Vec<Sample>> {
        self.entries
            .iter()
            .map(|e| match e.annotation {
                Annotation::Label(label) => Ok(Sample {
                    image_path: PathBuf::from(&e.path),
                    label,
                    split: e.split,
                }),
                Annotation::Boxes(_) => Err(Error::invalid(format!(
                    "`{}` carries boxes, expected a class label",
                    e.path
                ))),
            })
            .collect()
    }

    /// Entries without their split assignment, for re-splitting.
    pub fn unsplit(&self) -> Vec<(String, Annotation)> {
        self.entries
            .iter()
            .map(|e| (e.path.clone(), e.annotation.clone()))
            .collect()
    }

    /// One warning per entry whose image file does not exist under `root`.
    pub fn missing_files(&self, root: &Path) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| !root.join(&e.path).is_file())
            .map(|e| format!("missing image file `{}`", root.join(&e.path).display()))
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&HeaderRecord { seed: self.seed }).expect("header serializes");
        out.push('\n');
        for e in &self.entries {
            let (label, boxes) = match &e.annotation {
                Annotation::Label(l) => (Some(l.id()), None),
                Annotation::Boxes(b) => (
                    None,
                    Some(b.iter().map(|b| (b.cls, b.cx, b.cy, b.w, b.h)).collect()),
                ),
            };
            let rec = EntryRecord {
                path: e.path.clone(),
                split: e.split,
                label,
                boxes,
            };
            out.push_str(&serde_json::to_string(&rec).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut seed = None;
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |e: serde_json::Error| Error::Parse {
                line: line_no,
                message: e.to_string(),
            };
            let value: serde_json::Value = serde_json::from_str(line).map_err(parse_err)?;
            let is_header = value.as_object().is_some_and(|o| o.contains_key("seed"));
            if is_header {
                if seed.is_some() || !entries.is_empty() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "header record must come first and appear once".into(),
                    });
                }
                let h: HeaderRecord = serde_json::from_value(value).map_err(parse_err)?;
                seed = Some(h.seed);
                continue;
            }
            let rec: EntryRecord = serde_json::from_value(value).map_err(parse_err)?;
            let annotation = match (rec.label, rec.boxes) {
                (Some(l), None) => Annotation::Label(MaskClass::from_id(l).map_err(|e| Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })?),
                (None, Some(b)) => Annotation::Boxes(
                    b.into_iter()
                        .map(|(cls, cx, cy, w, h)| BBox::ground_truth(cls, cx, cy, w, h))
                        .collect(),
                ),
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "entry needs exactly one of `label` or `boxes`".into(),
                    })
                }
            };
            entries.push(ManifestEntry {
                path: rec.path,
                split: rec.split,
                annotation,
            });
        }
        Manifest::new(seed.unwrap_or(0), entries)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRecord {
    path: String,
    split: Split,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    label: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    boxes: Option<Vec<(u32, f64, f64, f64, f64)>>,
}

pub fn save_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    std::fs::write(path, manifest.to_jsonl())?;
    Ok(())
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    Manifest::from_jsonl(&std::fs::read_to_string(path)?)
}
