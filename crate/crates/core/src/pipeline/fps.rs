use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Rolling frames-per-second estimate over the last `window` timestamps.
#[derive(Debug, Clone)]
pub struct FpsMeter {
    window: usize,
    stamps: VecDeque<f64>,
}

impl FpsMeter {
    pub fn new(window: usize) -> Result<Self> {
        if window < 2 {
            return Err(Error::invalid(format!("fps window {window} must be at least 2")));
        }
        Ok(Self {
            window,
            stamps: VecDeque::with_capacity(window),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Records a timestamp in seconds and returns the current estimate,
    /// `None` while fewer than two timestamps are held. Timestamps must be
    /// strictly increasing.
    pub fn update(&mut self, now: f64) -> Result<Option<f64>> {
        if !now.is_finite() {
            return Err(Error::invalid(format!("non-finite timestamp {now}")));
        }
        if let Some(&last) = self.stamps.back() {
            if now <= last {
                return Err(Error::invalid(format!(
                    "timestamp {now} does not follow previous timestamp {last}"
                )));
            }
        }
        if self.stamps.len() == self.window {
            self.stamps.pop_front();
        }
        self.stamps.push_back(now);
        Ok(self.estimate())
    }

    pub fn estimate(&self) -> Option<f64> {
        let (first, last) = (self.stamps.front()?, self.stamps.back()?);
        if self.stamps.len() < 2 {
            return None;
        }
        Some((self.stamps.len() - 1) as f64 / (last - first))
    }
}
