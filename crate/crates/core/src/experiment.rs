//! Runs every (algorithm, training regime) configuration over one dataset.

use serde::{Deserialize, Serialize};

use crate::eval::{rank_features, EvalReport};
use crate::learn::{cross_validate, default_grid, Algorithm, CvConfig, LabeledDataset, LearnError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithms: Vec<Algorithm>,
    /// `false` for the natural class distribution, `true` for balanced
    /// training folds. Reports come out in this order.
    pub regimes: Vec<bool>,
    pub folds: usize,
    pub inner_folds: usize,
    pub seed: u64,
    /// Attach the feature ranking of the whole dataset to every report.
    pub information_gain: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let cv = CvConfig::default();
        ExperimentConfig {
            algorithms: Algorithm::ALL.to_vec(),
            regimes: vec![false],
            folds: cv.folds,
            inner_folds: cv.inner_folds,
            seed: cv.seed,
            information_gain: false,
        }
    }
}

impl ExperimentConfig {
    pub fn cv(&self, balanced: bool) -> CvConfig {
        CvConfig {
            folds: self.folds,
            inner_folds: self.inner_folds,
            balanced,
            seed: self.seed,
        }
    }
}

/// One report per regime and algorithm, regimes outermost.
pub fn run_experiment(
    data: &LabeledDataset,
    config: &ExperimentConfig,
) -> Result<Vec<EvalReport>, LearnError> {
    let ranking = config.information_gain.then(|| rank_features(data));
    let mut reports = Vec::new();
    for &balanced in &config.regimes {
        for &algorithm in &config.algorithms {
            let mut report = cross_validate(&default_grid(algorithm), data, &config.cv(balanced))?;
            report.information_gain = ranking.clone();
            reports.push(report);
        }
    }
    Ok(reports)
}
