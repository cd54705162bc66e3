use serde::{Deserialize, Serialize};

use crate::eval::EvalError;
use crate::logmodel::Intent;

/// Counts indexed by `[true class][predicted class]` in fixed class order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfusionMatrix {
    counts: [[u64; Intent::COUNT]; Intent::COUNT],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: [[u64; Intent::COUNT]; Intent::COUNT]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Intent, Intent)>) -> Self {
        let mut cm = Self::new();
        for (truth, predicted) in pairs {
            cm.add(truth, predicted);
        }
        cm
    }

    pub fn add(&mut self, truth: Intent, predicted: Intent) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in row.iter_mut().zip(other_row) {
                *a += b;
            }
        }
    }

    pub fn get(&self, truth: Intent, predicted: Intent) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn counts(&self) -> &[[u64; Intent::COUNT]; Intent::COUNT] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..Intent::COUNT).map(|i| self.counts[i][i]).sum()
    }

    /// Number of units whose true class is each class.
    pub fn true_counts(&self) -> [u64; Intent::COUNT] {
        self.counts.map(|row| row.iter().sum())
    }

    pub fn predicted_counts(&self) -> [u64; Intent::COUNT] {
        let mut out = [0; Intent::COUNT];
        for row in &self.counts {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerClass<T> {
    pub informational: T,
    pub navigational: T,
    pub transactional: T,
}

impl<T: Copy> PerClass<T> {
    pub fn from_fn(mut f: impl FnMut(Intent) -> T) -> Self {
        PerClass {
            informational: f(Intent::Informational),
            navigational: f(Intent::Navigational),
            transactional: f(Intent::Transactional),
        }
    }

    pub fn get(&self, class: Intent) -> T {
        match class {
            Intent::Informational => self.informational,
            Intent::Navigational => self.navigational,
            Intent::Transactional => self.transactional,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub per_class: PerClass<ClassMetrics>,
    pub weighted: ClassMetrics,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class and weighted precision/recall/F1 plus accuracy.
///
/// Undefined precision, recall or F1 (zero denominator) count as 0. Weighted
/// values are means over classes weighted by `class_freqs`.
pub fn metrics(cm: &ConfusionMatrix, class_freqs: &[f64; Intent::COUNT]) -> Result<Metrics, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let weight_sum: f64 = class_freqs.iter().sum();
    if class_freqs.iter().any(|w| !w.is_finite() || *w < 0.0) || weight_sum <= 0.0 {
        return Err(EvalError::InvalidWeights);
    }
    let predicted = cm.predicted_counts();
    let actual = cm.true_counts();
    let per_class = PerClass::from_fn(|c| {
        let tp = cm.get(c, c);
        let precision = ratio(tp, predicted[c.index()]);
        let recall = ratio(tp, actual[c.index()]);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassMetrics {
            precision,
            recall,
            f1,
        }
    });
    let weighted_mean = |pick: fn(&ClassMetrics) -> f64| {
        Intent::ALL
            .iter()
            .map(|&c| class_freqs[c.index()] * pick(&per_class.get(c)))
            .sum::<f64>()
            / weight_sum
    };
    Ok(Metrics {
        accuracy: ratio(cm.correct(), total),
        per_class,
        weighted: ClassMetrics {
            precision: weighted_mean(|m| m.precision),
            recall: weighted_mean(|m| m.recall),
            f1: weighted_mean(|m| m.f1),
        },
    })
}

/// [`metrics`] weighted by the matrix's own true-class counts.
pub fn metrics_from_matrix(cm: &ConfusionMatrix) -> Result<Metrics, EvalError> {
    metrics(cm, &cm.true_counts().map(|c| c as f64))
}
