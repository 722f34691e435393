//! Config file handling and flag precedence.
//!
//! Values resolve as: command-line flag, then config file, then (for the
//! seed only) `MASKWATCH_SEED`, then the built-in default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;

use serde::Deserialize;

use crate::Usage;

pub const SEED_ENV: &str = "MASKWATCH_SEED";
pub const DEFAULT_SEED: u64 = 0;

/// Every key a config file may set. Unknown keys are rejected.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub ratios: Option<String>,
    pub task: Option<String>,
    pub threshold: Option<f64>,
    pub class: Option<String>,
    pub epochs: Option<usize>,
    pub lr: Option<f32>,
    pub batch: Option<usize>,
    pub momentum: Option<f32>,
    pub augment: Option<bool>,
    pub stop_at: Option<f64>,
    pub temperature: Option<f64>,
    pub alpha: Option<f64>,
    pub split: Option<String>,
    pub iou: Option<f64>,
    pub classes: Option<usize>,
    pub warmup: Option<usize>,
    pub repeats: Option<usize>,
    pub inputs: Option<usize>,
    pub hardware: Option<String>,
    pub pipeline: Option<String>,
    pub conf: Option<f64>,
    pub nms: Option<f64>,
    pub crop_margin: Option<f64>,
    pub detector: Option<String>,
    pub classifier: Option<String>,
    pub stub_delay_ms: Option<u64>,
}

pub fn load_config(path: &Path) -> Result<FileConfig, Usage> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| Usage(format!("config {}: {}", path.display(), e.0)))
}

pub fn parse_config(text: &str) -> Result<FileConfig, Usage> {
    toml::from_str(text).map_err(|e| Usage(e.message().to_string()))
}

/// Resolves values and remembers what was used, for echoing into reports.
#[derive(Debug, Default)]
pub struct Resolver {
    pub file: FileConfig,
    used: BTreeMap<&'static str, String>,
}

impl Resolver {
    pub fn new(file: FileConfig) -> Self {
        Self {
            file,
            used: BTreeMap::new(),
        }
    }

    pub fn from_cli(path: Option<&Path>) -> anyhow::Result<Self> {
        let file = match path {
            Some(p) => load_config(p)?,
            None => FileConfig::default(),
        };
        Ok(Self::new(file))
    }

    pub fn pick<T: Display>(&mut self, key: &'static str, flag: Option<T>, file: Option<T>, default: T) -> T {
        let v = flag.or(file).unwrap_or(default);
        self.used.insert(key, v.to_string());
        v
    }

    pub fn pick_opt<T: Display>(&mut self, key: &'static str, flag: Option<T>, file: Option<T>) -> Option<T> {
        let v = flag.or(file);
        if let Some(v) = &v {
            self.used.insert(key, v.to_string());
        }
        v
    }

    pub fn seed(&mut self, flag: Option<u64>) -> Result<u64, Usage> {
        let env = match std::env::var(SEED_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| Usage(format!("{SEED_ENV}=`{s}` is not a non-negative integer")))?,
            ),
            Err(_) => None,
        };
        let file = self.file.seed;
        Ok(self.pick("seed", flag, file.or(env), DEFAULT_SEED))
    }

    /// Records a value that has no file key (paths and similar).
    pub fn note(&mut self, key: &'static str, value: impl Display) {
        self.used.insert(key, value.to_string());
    }

    pub fn notes(&self) -> Vec<String> {
        let pairs: Vec<String> = self.used.iter().map(|(k, v)| format!("{k}={v}")).collect();
        vec![format!("config: {}", pairs.join(" "))]
    }
}
