use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on box edges for coordinates produced by rounding.
pub const EDGE_EPS: f64 = 1e-6;

/// Normalized center-format box with a class id and confidence.
///
/// Ground-truth boxes carry `conf == 1.0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub cls: u32,
    pub conf: f64,
}

impl BBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, cls: u32, conf: f64) -> Self {
        Self {
            cx,
            cy,
            w,
            h,
            cls,
            conf,
        }
    }

    pub fn ground_truth(cls: u32, cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx, cy, w, h, cls, 1.0)
    }

    pub fn from_corners(x0: f64, y0: f64, x1: f64, y1: f64, cls: u32, conf: f64) -> Self {
        Self::new((x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0, cls, conf)
    }

    pub fn x_min(&self) -> f64 {
        self.cx - self.w / 2.0
    }

    pub fn x_max(&self) -> f64 {
        self.cx + self.w / 2.0
    }

    pub fn y_min(&self) -> f64 {
        self.cy - self.h / 2.0
    }

    pub fn y_max(&self) -> f64 {
        self.cy + self.h / 2.0
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn with_conf(mut self, conf: f64) -> Self {
        self.conf = conf;
        self
    }

    pub fn with_cls(mut self, cls: u32) -> Self {
        self.cls = cls;
        self
    }

    /// Clips the box to the unit image. Returns `None` when nothing remains.
    pub fn clip_to_unit(&self) -> Option<BBox> {
        let x0 = self.x_min().clamp(0.0, 1.0);
        let x1 = self.x_max().clamp(0.0, 1.0);
        let y0 = self.y_min().clamp(0.0, 1.0);
        let y1 = self.y_max().clamp(0.0, 1.0);
        (x1 > x0 && y1 > y0).then(|| BBox::from_corners(x0, y0, x1, y1, self.cls, self.conf))
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.cx, self.cy, self.w, self.h, self.conf];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite box {self:?}")));
        }
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(self.cx) || !in_unit(self.cy) {
            return Err(Error::Validation(format!("box center outside unit image: {self:?}")));
        }
        if !(self.w > 0.0 && self.w <= 1.0 && self.h > 0.0 && self.h <= 1.0) {
            return Err(Error::Validation(format!("box size outside (0, 1]: {self:?}")));
        }
        if self.x_min() < -EDGE_EPS
            || self.x_max() > 1.0 + EDGE_EPS
            || self.y_min() < -EDGE_EPS
            || self.y_max() > 1.0 + EDGE_EPS
        {
            return Err(Error::Validation(format!("box extends past the image: {self:?}")));
        }
        if !in_unit(self.conf) {
            return Err(Error::Validation(format!("confidence outside [0, 1]: {self:?}")));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }
}
