use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::{Annotation, Manifest, ManifestEntry};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitRatios {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let r = Self { train, val, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::config(format!("split ratios must be non-negative: {self:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::config(format!("split ratios sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl FromStr for SplitRatios {
    type Err = Error;

    /// Parses `"0.8,0.1,0.1"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::config(format!("bad ratios `{s}`: {e}")))?;
        match parts[..] {
            [a, b, c] => SplitRatios::new(a, b, c),
            _ => Err(Error::config(format!("expected three ratios, got `{s}`"))),
        }
    }
}

/// Split sizes for `n` entries: validation and test sizes are rounded half
/// away from zero, train takes the remainder.
pub fn split_counts(n: usize, ratios: &SplitRatios) -> (usize, usize, usize) {
    let val = ((n as f64 * ratios.val).round() as usize).min(n);
    let test = ((n as f64 * ratios.test).round() as usize).min(n - val);
    (n - val - test, val, test)
}

/// Assigns every entry to exactly one split.
///
/// The assignment depends only on the entry order and `seed`; output keeps
/// the input order.
pub fn split_manifest(
    entries: impl IntoIterator<Item = (String, Annotation)>,
    ratios: &SplitRatios,
    seed: u64,
) -> Result<Manifest> {
    ratios.validate()?;
    let entries: Vec<(String, Annotation)> = entries.into_iter().collect();
    if entries.is_empty() {
        return Err(Error::invalid("cannot split an empty entry list"));
    }
    let (n_train, n_val, _) = split_counts(entries.len(), ratios);

    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![Split::Test; entries.len()];
    for (rank, &idx) in order.iter().enumerate() {
        assignment[idx] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }

    let entries = entries
        .into_iter()
        .zip(assignment)
        .map(|((path, annotation), split)| ManifestEntry {
            path,
            split,
            annotation,
        })
        .collect();
    Manifest::new(seed, entries)
}
