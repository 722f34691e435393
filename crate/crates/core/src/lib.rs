//! Face-mask detection toolkit.
//!
//! Two runtime pipelines share this crate: a two-stage face detector plus
//! mask classifier, and a single-shot grid detector. Around them sit the
//! dataset tooling, a small trainable CNN with knowledge distillation, and
//! the evaluation metrics used to compare the two.

pub mod data;
pub mod detect;
pub mod error;
pub mod eval;
pub mod image;
pub mod models;
pub mod pipeline;

pub use error::{Error, Result};
