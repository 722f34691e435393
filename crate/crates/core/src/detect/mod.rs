//! Box geometry, suppression, grid decoding and detector backends.

mod backend;
mod geometry;
mod grid;
pub mod interchange;
mod nms;

pub use backend::{detect_frame, DetectorBackend, GridDetector, ScriptedDetector};
pub use geometry::iou;
pub use grid::{decode_grid, GridOutput};
pub use nms::nms;

/// A detector prediction: a box whose `cls` and `conf` are the predicted
/// class id and final confidence.
pub type Detection = crate::data::BBox;

pub const DEFAULT_NMS_THRESHOLD: f64 = 0.45;
pub const DEFAULT_CONF_THRESHOLD: f64 = 0.25;
