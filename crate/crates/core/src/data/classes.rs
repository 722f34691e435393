use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Three-way mask-wearing label used by the classification task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskClass {
    Correct = 0,
    Incorrect = 1,
    None = 2,
}

impl MaskClass {
    pub const ALL: [MaskClass; 3] = [MaskClass::Correct, MaskClass::Incorrect, MaskClass::None];
    pub const COUNT: usize = 3;

    pub fn id(self) -> u32 {
        self as u32
    }

    pub fn from_id(id: u32) -> Result<Self> {
        Self::ALL
            .get(id as usize)
            .copied()
            .ok_or_else(|| Error::invalid(format!("mask class id {id} out of range 0..3")))
    }

    pub fn name(self) -> &'static str {
        match self {
            MaskClass::Correct => "correct",
            MaskClass::Incorrect => "incorrect",
            MaskClass::None => "none",
        }
    }
}

impl fmt::Display for MaskClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MaskClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correct" => Ok(MaskClass::Correct),
            "incorrect" => Ok(MaskClass::Incorrect),
            "none" => Ok(MaskClass::None),
            other => Err(Error::invalid(format!("unknown mask class `{other}`"))),
        }
    }
}

/// Two-way label used by the single-shot detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetClass {
    Positive = 0,
    Negative = 1,
}

impl DetClass {
    pub const ALL: [DetClass; 2] = [DetClass::Positive, DetClass::Negative];
    pub const COUNT: usize = 2;

    pub fn id(self) -> u32 {
        self as u32
    }

    pub fn from_id(id: u32) -> Result<Self> {
        Self::ALL
            .get(id as usize)
            .copied()
            .ok_or_else(|| Error::invalid(format!("detection class id {id} out of range 0..2")))
    }

    pub fn name(self) -> &'static str {
        match self {
            DetClass::Positive => "positive",
            DetClass::Negative => "negative",
        }
    }
}

impl fmt::Display for DetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(DetClass::Positive),
            "negative" => Ok(DetClass::Negative),
            other => Err(Error::invalid(format!("unknown detection class `{other}`"))),
        }
    }
}

/// Collapses the three-way label onto the detector's two classes:
/// only a correctly worn mask is positive.
pub fn merge_to_detclass(label: MaskClass) -> DetClass {
    match label {
        MaskClass::Correct => DetClass::Positive,
        MaskClass::Incorrect | MaskClass::None => DetClass::Negative,
    }
}

/// A box class id from either label space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelClass {
    Det(DetClass),
    Mask(MaskClass),
}

impl LabelClass {
    pub fn id(self) -> u32 {
        match self {
            LabelClass::Det(c) => c.id(),
            LabelClass::Mask(c) => c.id(),
        }
    }
}

impl From<DetClass> for LabelClass {
    fn from(c: DetClass) -> Self {
        LabelClass::Det(c)
    }
}

impl From<MaskClass> for LabelClass {
    fn from(c: MaskClass) -> Self {
        LabelClass::Mask(c)
    }
}
