use serde::{Deserialize, Serialize};

use super::{MetricsReport, Task};
use crate::error::{Error, Result};

/// Counts indexed `[truth][prediction]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if c == 0 || counts.iter().any(|row| row.len() != c) {
            return Err(Error::Validation("confusion matrix must be square and non-empty".into()));
        }
        Ok(Self { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn add(&mut self, truth: usize, prediction: usize) {
        self.counts[truth][prediction] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Diagonal over row sum; `None` for classes with no samples.
    pub fn per_class_accuracy(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let n: u64 = row.iter().sum();
                (n > 0).then(|| row[i] as f64 / n as f64)
            })
            .collect()
    }

    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.trace() as f64 / total as f64)
    }
}

/// Accuracy metrics for class ids in `[0, classes)`.
pub fn classify_metrics(predictions: &[u32], labels: &[u32], classes: usize) -> Result<MetricsReport> {
    if predictions.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::invalid("no samples to evaluate"));
    }
    if classes == 0 {
        return Err(Error::invalid("class count must be positive"));
    }
    let mut confusion = ConfusionMatrix::new(classes);
    for (&p, &t) in predictions.iter().zip(labels) {
        if p as usize >= classes || t as usize >= classes {
            return Err(Error::invalid(format!("class id {} out of range 0..{classes}", p.max(t))));
        }
        confusion.add(t as usize, p as usize);
    }
    Ok(MetricsReport {
        task: Task::Classification,
        per_class_accuracy: confusion.per_class_accuracy(),
        total_accuracy: confusion.accuracy(),
        confusion: Some(confusion),
        ap_per_class: Vec::new(),
        map: None,
        inferences_per_sec: None,
        hardware: None,
        notes: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_counted_example() {
        let r = classify_metrics(&[0, 1, 1, 2], &[0, 0, 1, 2], 3).unwrap();
        assert_eq!(r.per_class_accuracy, vec![Some(0.5), Some(1.0), Some(1.0)]);
        assert_eq!(r.total_accuracy, Some(0.75));
        assert_eq!(r.confusion.unwrap().counts(), &[vec![1, 1, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn perfect_predictions() {
        let labels = [2, 0, 1, 1, 0];
        let r = classify_metrics(&labels, &labels, 3).unwrap();
        assert_eq!(r.total_accuracy, Some(1.0));
        let c = r.confusion.unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c.counts()[i][j] > 0, i == j);
            }
        }
    }

    #[test]
    fn absent_class_is_none() {
        let r = classify_metrics(&[0, 1], &[0, 1], 3).unwrap();
        assert_eq!(r.per_class_accuracy[2], None);
    }

    #[test]
    fn precondition_errors() {
        assert!(matches!(classify_metrics(&[], &[], 3), Err(Error::InvalidInput(_))));
        assert!(matches!(classify_metrics(&[0], &[0, 1], 3), Err(Error::InvalidInput(_))));
        assert!(matches!(classify_metrics(&[3], &[0], 3), Err(Error::InvalidInput(_))));
    }

    proptest! {
        #[test]
        fn total_is_indicator_mean(pairs in prop::collection::vec((0u32..4, 0u32..4), 1..60)) {
            let (p, l): (Vec<u32>, Vec<u32>) = pairs.into_iter().unzip();
            let r = classify_metrics(&p, &l, 4).unwrap();
            let mean = p.iter().zip(&l).filter(|(a, b)| a == b).count() as f64 / p.len() as f64;
            prop_assert!((r.total_accuracy.unwrap() - mean).abs() < 1e-12);
            prop_assert_eq!(r.confusion.unwrap().total(), p.len() as u64);
        }
    }
}
