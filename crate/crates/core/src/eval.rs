//! Accuracy, pairwise accuracy and confusion matrices. All counts are exact
//! integers; ratios are formed at the end.

use std::collections::HashSet;

use crate::error::{PlmError, Result};
use crate::types::{BinaryPrediction, LabeledBatch, Posterior};

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax_predict(p: &Posterior) -> usize {
    let mut best = 0;
    for (k, &v) in p.probs().iter().enumerate().skip(1) {
        if v > p.get(best) {
            best = k;
        }
    }
    best
}

/// Pairs each prediction with its label. Both sides must cover exactly the
/// same sample ids.
fn align<'a, T>(
    predictions: &'a [(String, T)],
    labels: &LabeledBatch,
) -> Result<Vec<(&'a T, usize)>> {
    if predictions.len() != labels.len() {
        return Err(PlmError::IdMismatch(format!(
            "{} predictions for {} labeled samples",
            predictions.len(),
            labels.len()
        )));
    }
    let mut seen = HashSet::with_capacity(predictions.len());
    predictions
        .iter()
        .map(|(id, pred)| {
            if !seen.insert(id.as_str()) {
                return Err(PlmError::IdMismatch(format!("duplicate prediction for {id}")));
            }
            labels
                .label_of(id)
                .map(|label| (pred, label))
                .ok_or_else(|| PlmError::IdMismatch(format!("no label for sample {id}")))
        })
        .collect()
}

pub fn accuracy(predictions: &[(String, usize)], labels: &LabeledBatch) -> Result<f64> {
    let aligned = align(predictions, labels)?;
    if aligned.is_empty() {
        return Err(PlmError::Empty("no predictions".into()));
    }
    let correct = aligned.iter().filter(|(pred, label)| **pred == *label).count();
    Ok(correct as f64 / aligned.len() as f64)
}

/// Fraction of samples whose more likely class (ties to `class_a`) equals
/// the label. Every label must be one of the prediction's two classes.
pub fn pairwise_accuracy(
    predictions: &[(String, BinaryPrediction)],
    labels: &LabeledBatch,
) -> Result<f64> {
    if predictions.is_empty() {
        return Err(PlmError::Empty("no binary predictions".into()));
    }
    let mut correct = 0usize;
    for (id, pred) in predictions {
        let label = labels
            .label_of(id)
            .ok_or_else(|| PlmError::IdMismatch(format!("no label for sample {id}")))?;
        if label != pred.class_a && label != pred.class_b {
            return Err(PlmError::ForeignLabel {
                sample_id: id.clone(),
                label,
                class_a: pred.class_a,
                class_b: pred.class_b,
            });
        }
        if pred.predicted_class() == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / predictions.len() as f64)
}

/// Counts indexed `[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if c < 2 || counts.iter().any(|row| row.len() != c) {
            return Err(PlmError::Shape(
                "confusion matrix must be square with at least 2 classes".into(),
            ));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn c(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.c()).map(|k| self.counts[k][k]).sum()
    }

    pub fn support(&self, truth: usize) -> u64 {
        self.counts[truth].iter().sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    /// Adds another matrix of the same size.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.c() != self.c() {
            return Err(PlmError::ClassCountMismatch {
                expected: self.c(),
                found: other.c(),
            });
        }
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in row.iter_mut().zip(other_row) {
                *a += b;
            }
        }
        Ok(())
    }
}

pub fn confusion_matrix(
    predictions: &[(String, usize)],
    labels: &LabeledBatch,
) -> Result<ConfusionMatrix> {
    let c = labels.c();
    let mut counts = vec![vec![0u64; c]; c];
    for (pred, label) in align(predictions, labels)? {
        if *pred >= c {
            return Err(PlmError::InvalidParameter(format!(
                "predicted class {pred} outside [0, {c})"
            )));
        }
        counts[label][*pred] += 1;
    }
    ConfusionMatrix::from_counts(counts)
}

/// Unordered pair `(i, j)`, `i < j`, with the most mutual confusion
/// `m_ij + m_ji`, and that count. Ties go to the lexicographically smallest
/// pair; `None` when nothing is confused.
pub fn worst_confused_pair(confusion: &ConfusionMatrix) -> Option<(usize, usize, u64)> {
    let c = confusion.c();
    let mut best: Option<(usize, usize, u64)> = None;
    for i in 0..c {
        for j in (i + 1)..c {
            let mass = confusion.get(i, j) + confusion.get(j, i);
            if mass > 0 && best.is_none_or(|(_, _, m)| mass > m) {
                best = Some((i, j, mass));
            }
        }
    }
    best
}
