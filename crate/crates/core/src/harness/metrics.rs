use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Test examples of this class.
    pub support: usize,
    /// Precision and recall were both zero or undefined; `f1` is reported as 0.
    pub f1_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `confusion[actual][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
}

impl Metrics {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn macro_f1(&self) -> f64 {
        self.per_class.iter().map(|c| c.f1).sum::<f64>() / self.per_class.len() as f64
    }

    /// Counts, precision, recall and F1 from a confusion matrix. Each ratio
    /// is one division of integer counts, F1 as `2TP / (2TP + FP + FN)`.
    pub fn from_confusion(confusion: Vec<Vec<usize>>) -> Metrics {
        let k = confusion.len();
        let total: usize = confusion.iter().flatten().sum();
        let trace: usize = (0..k).map(|i| confusion[i][i]).sum();
        let per_class = (0..k)
            .map(|c| {
                let tp = confusion[c][c];
                let actual: usize = confusion[c].iter().sum();
                let predicted: usize = confusion.iter().map(|row| row[c]).sum();
                let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, actual);
                let undefined = tp == 0;
                ClassMetrics {
                    precision,
                    recall,
                    f1: ratio(2 * tp, 2 * tp + (predicted - tp) + (actual - tp)),
                    support: actual,
                    f1_undefined: undefined,
                }
            })
            .collect();
        Metrics {
            accuracy: if total == 0 {
                0.0
            } else {
                trace as f64 / total as f64
            },
            confusion,
            per_class,
        }
    }

    pub fn from_predictions(classes: usize, actual: &[usize], predicted: &[usize]) -> Metrics {
        let mut confusion = vec![vec![0usize; classes]; classes];
        for (&a, &p) in actual.iter().zip(predicted) {
            confusion[a][p] += 1;
        }
        Metrics::from_confusion(confusion)
    }
}
