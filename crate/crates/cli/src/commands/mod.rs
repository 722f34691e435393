pub mod bench;
pub mod dataset;
pub mod distill;
pub mod eval;
pub mod run;
pub mod train;

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use maskwatch::data::{AugmentationSpec, Normalization};
use maskwatch::models::CnnSpec;
use serde::Serialize;

use crate::Usage;

pub const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

pub fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        bail!("{what} {} does not exist", path.display());
    }
    Ok(())
}

pub fn require_dir(path: &Path, what: &str) -> Result<()> {
    if !path.is_dir() {
        bail!("{what} {} is not a directory", path.display());
    }
    Ok(())
}

/// Parent directory of an output path must already exist.
pub fn require_output(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => {
            bail!("output directory {} does not exist", p.display())
        }
        _ => Ok(()),
    }
}

pub fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Image files directly inside `dir`, sorted by file name.
pub fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && is_image(&path) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Pretty JSON to `path`, or to stdout when no path is given.
pub fn emit_json(value: &impl Serialize, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

/// A network spec from a TOML or JSON file (chosen by extension).
pub fn load_spec(path: &Path) -> Result<CnnSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec: CnnSpec = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| Usage(format!("spec {}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| Usage(format!("spec {}: {}", path.display(), e.message())))?
    };
    spec.validate().map_err(|e| Usage(e.to_string()))?;
    Ok(spec)
}

pub fn augmentation(enabled: bool, side: usize, normalization: Normalization) -> Option<AugmentationSpec> {
    enabled.then(|| AugmentationSpec {
        output_side: side,
        normalization,
        ..AugmentationSpec::default()
    })
}

pub fn delay(ms: u64) -> Duration {
    Duration::from_millis(ms)
}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Turns a library config error into a usage error.
pub fn as_usage<T>(r: maskwatch::Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        maskwatch::Error::Config(m) => usage(m),
        other => other.into(),
    })
}
