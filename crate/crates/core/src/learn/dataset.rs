use std::collections::HashSet;

use serde::Serialize;

use crate::features::{featurize_corpus, FeatureRow, FeatureVector, Granularity};
use crate::ingest::LogCorpus;
use crate::learn::LearnError;
use crate::logmodel::Intent;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledRow {
    pub unit_id: String,
    pub features: FeatureVector,
    pub label: Intent,
}

/// Feature rows with a definite intent each. Unit ids are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    rows: Vec<LabeledRow>,
    granularity: Granularity,
}

impl LabeledDataset {
    pub fn new(rows: Vec<LabeledRow>, granularity: Granularity) -> Result<Self, LearnError> {
        let mut seen = HashSet::with_capacity(rows.len());
        for row in &rows {
            if !seen.insert(row.unit_id.as_str()) {
                return Err(LearnError::DuplicateUnit(row.unit_id.clone()));
            }
        }
        Ok(LabeledDataset { rows, granularity })
    }

    /// Keeps rows labeled with one of the three intents; unlabeled and
    /// ambiguous rows are dropped.
    pub fn from_feature_rows(
        rows: impl IntoIterator<Item = FeatureRow>,
        granularity: Granularity,
    ) -> Result<Self, LearnError> {
        let rows = rows
            .into_iter()
            .filter_map(|row| {
                let label = row.label?.intent()?;
                Some(LabeledRow {
                    unit_id: row.unit_id,
                    features: row.features,
                    label,
                })
            })
            .collect();
        Self::new(rows, granularity)
    }

    pub fn from_corpus(corpus: &LogCorpus, granularity: Granularity) -> Result<Self, LearnError> {
        Self::from_feature_rows(featurize_corpus(corpus, granularity), granularity)
    }

    pub fn rows(&self) -> &[LabeledRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    /// Row counts per intent, in class order.
    pub fn class_counts(&self) -> [usize; Intent::COUNT] {
        class_counts(self.rows.iter().map(|r| r.label))
    }

    pub fn labels(&self) -> Vec<Intent> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.features.to_array().to_vec()).collect()
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.features.to_array()[feature]).collect()
    }

    /// The rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            granularity: self.granularity,
        }
    }
}

pub(crate) fn class_counts(labels: impl Iterator<Item = Intent>) -> [usize; Intent::COUNT] {
    let mut counts = [0; Intent::COUNT];
    for label in labels {
        counts[label.index()] += 1;
    }
    counts
}
