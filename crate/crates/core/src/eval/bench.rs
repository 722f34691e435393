use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::detect::DetectorBackend;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::models::ClassifierBackend;

#[derive(Clone, Copy)]
pub enum BenchTarget<'a> {
    /// One batched `predict_logits` call per pass.
    Classifier(&'a dyn ClassifierBackend),
    /// One `detect` call per input per pass.
    Detector(&'a dyn DetectorBackend),
}

impl BenchTarget<'_> {
    pub fn name(&self) -> &str {
        match self {
            BenchTarget::Classifier(b) => b.name(),
            BenchTarget::Detector(b) => b.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    /// Median over timed passes of inputs per second.
    pub inferences_per_sec: f64,
    pub pass_rates: Vec<f64>,
    pub inputs: usize,
    pub hardware: String,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}

/// Runs `pass` `warmup` times untimed, then `repeats` times timed, and
/// returns each timed pass's rate of `inputs` per second.
pub fn bench_passes(inputs: usize, warmup: usize, repeats: usize, mut pass: impl FnMut() -> Result<()>) -> Result<Vec<f64>> {
    if inputs == 0 {
        return Err(Error::invalid("benchmark needs at least one input"));
    }
    if repeats == 0 {
        return Err(Error::invalid("benchmark needs at least one timed pass"));
    }
    for _ in 0..warmup {
        pass()?;
    }
    let mut rates = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        pass()?;
        let secs = start.elapsed().as_secs_f64().max(1e-9);
        rates.push(inputs as f64 / secs);
    }
    Ok(rates)
}

/// Model-only throughput over `inputs`.
pub fn bench_inference(
    target: BenchTarget<'_>,
    inputs: &[Image],
    warmup: usize,
    repeats: usize,
    hardware: &str,
) -> Result<BenchResult> {
    let rates = bench_passes(inputs.len(), warmup, repeats, || match target {
        BenchTarget::Classifier(b) => {
            let out = b.predict_logits(inputs)?;
            if out.len() != inputs.len() {
                return Err(Error::backend(b.name(), "output count differs from input count"));
            }
            Ok(())
        }
        BenchTarget::Detector(b) => inputs.iter().try_for_each(|img| b.detect(img).map(drop)),
    })?;
    Ok(BenchResult {
        inferences_per_sec: median(&rates).expect("at least one pass"),
        pass_rates: rates,
        inputs: inputs.len(),
        hardware: hardware.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn median_ignores_one_outlier() {
        let clean = [100.0, 101.0, 99.0, 100.5, 99.5];
        let mut noisy = clean;
        noisy[2] = 1.0;
        // Replacing one pass with an outlier moves the median by at most one rank.
        let (a, b) = (median(&clean).unwrap(), median(&noisy).unwrap());
        assert!((a - b).abs() <= 0.5);
    }

    #[test]
    fn slow_pass_is_absorbed() {
        let mut call = 0;
        let rates = bench_passes(10, 0, 5, || {
            call += 1;
            std::thread::sleep(Duration::from_millis(if call == 3 { 60 } else { 10 }));
            Ok(())
        })
        .unwrap();
        let m = median(&rates).unwrap();
        assert!(m > 500.0 && m < 1100.0, "{m}");
    }

    #[test]
    fn preconditions() {
        assert!(bench_passes(0, 0, 1, || Ok(())).is_err());
        assert!(bench_passes(1, 0, 0, || Ok(())).is_err());
        let mut n = 0;
        let rates = bench_passes(1, 0, 1, || {
            n += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!((rates.len(), n), (1, 1));
    }
}
