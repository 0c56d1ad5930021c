//! Confusion matrices and the accuracy/precision/recall/F1 report.

use crate::features::FeatureVector;
use crate::forest::RandomForest;
use crate::image::{to_normalized_tensor, ImageDataset};
use crate::nn::{argmax, ModelState};

use super::ExperimentError;

/// N×N prediction counts; rows are actual classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

/// One class's one-vs-rest tally.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassTally {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Actual samples of this class in the evaluated set.
    pub support: u64,
}

/// Overall accuracy plus per-class and macro-averaged precision/recall/F1.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> ConfusionMatrix {
        ConfusionMatrix {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    /// Builds a matrix from parallel actual/predicted class lists.
    pub fn from_pairs(
        actual: &[usize],
        predicted: &[usize],
        n_classes: usize,
    ) -> Result<ConfusionMatrix, ExperimentError> {
        if actual.len() != predicted.len() {
            return Err(ExperimentError::BadConfig(format!(
                "{} actual labels vs {} predictions",
                actual.len(),
                predicted.len()
            )));
        }
        let mut m = ConfusionMatrix::new(n_classes);
        for (&a, &p) in actual.iter().zip(predicted) {
            m.record(a, p)?;
        }
        Ok(m)
    }

    pub fn record(&mut self, actual: usize, predicted: usize) -> Result<(), ExperimentError> {
        for class in [actual, predicted] {
            if class >= self.n_classes {
                return Err(ExperimentError::IndexOutOfRange {
                    index: class,
                    len: self.n_classes,
                });
            }
        }
        self.counts[actual * self.n_classes + predicted] += 1;
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn count(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.n_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Correct predictions: the main diagonal.
    pub fn trace(&self) -> u64 {
        (0..self.n_classes).map(|c| self.count(c, c)).sum()
    }

    /// One-vs-rest tally for `class`; `tp+fp+fn+tn` always equals the total.
    pub fn tally(&self, class: usize) -> ClassTally {
        let tp = self.count(class, class);
        let row: u64 = (0..self.n_classes).map(|p| self.count(class, p)).sum();
        let col: u64 = (0..self.n_classes).map(|a| self.count(a, class)).sum();
        let fp = col - tp;
        let fn_ = row - tp;
        ClassTally {
            tp,
            fp,
            fn_,
            tn: self.total() - tp - fp - fn_,
        }
    }

    /// Derives the metric report: accuracy = trace/total, per-class
    /// precision `tp/(tp+fp)` and recall `tp/(tp+fn)` (both 0 when their
    /// denominator is 0), `F1 = 2PR/(P+R)` (0 when `P+R = 0`), and
    /// unweighted macro means over classes.
    pub fn report(&self) -> Result<MetricsReport, ExperimentError> {
        let total = self.total();
        if total == 0 {
            return Err(ExperimentError::EmptyTestSet);
        }
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let per_class: Vec<ClassMetrics> = (0..self.n_classes)
            .map(|c| {
                let t = self.tally(c);
                let precision = ratio(t.tp, t.tp + t.fp);
                let recall = ratio(t.tp, t.tp + t.fn_);
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassMetrics {
                    precision,
                    recall,
                    f1,
                    support: t.tp + t.fn_,
                }
            })
            .collect();
        let n = self.n_classes as f64;
        Ok(MetricsReport {
            accuracy: self.trace() as f64 / total as f64,
            macro_precision: per_class.iter().map(|m| m.precision).sum::<f64>() / n,
            macro_recall: per_class.iter().map(|m| m.recall).sum::<f64>() / n,
            macro_f1: per_class.iter().map(|m| m.f1).sum::<f64>() / n,
            per_class,
        })
    }
}

/// Evaluates a CNN on `dataset[idx]`.
pub fn evaluate_cnn(
    state: &ModelState<f32>,
    dataset: &ImageDataset,
    idx: &[usize],
) -> Result<(ConfusionMatrix, MetricsReport), ExperimentError> {
    if idx.is_empty() {
        return Err(ExperimentError::EmptyTestSet);
    }
    let mut matrix = ConfusionMatrix::new(dataset.class_names.len());
    for &i in idx {
        let sample = dataset
            .samples
            .get(i)
            .ok_or(ExperimentError::IndexOutOfRange {
                index: i,
                len: dataset.samples.len(),
            })?;
        let logits = state.forward_logits(&to_normalized_tensor::<f32>(sample))?;
        matrix.record(sample.label_index as usize, argmax(logits.data()))?;
    }
    let report = matrix.report()?;
    Ok((matrix, report))
}

/// Evaluates a forest on `vectors[idx]` against `labels[idx]`.
pub fn evaluate_forest(
    forest: &RandomForest<f64>,
    vectors: &[FeatureVector],
    labels: &[usize],
    idx: &[usize],
) -> Result<(ConfusionMatrix, MetricsReport), ExperimentError> {
    if idx.is_empty() {
        return Err(ExperimentError::EmptyTestSet);
    }
    if vectors.len() != labels.len() {
        return Err(ExperimentError::BadConfig(format!(
            "{} vectors vs {} labels",
            vectors.len(),
            labels.len()
        )));
    }
    let mut matrix = ConfusionMatrix::new(forest.n_classes());
    for &i in idx {
        let v = vectors.get(i).ok_or(ExperimentError::IndexOutOfRange {
            index: i,
            len: vectors.len(),
        })?;
        let (class, _) = forest.predict(v.as_slice())?;
        matrix.record(labels[i], class)?;
    }
    let report = matrix.report()?;
    Ok((matrix, report))
}
