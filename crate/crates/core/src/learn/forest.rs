//! Bagged CART trees with per-split feature subsampling.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::learn::tree::{DecisionTree, FeatureSampler, TreeParams};
use crate::learn::{argmax, present_classes};
use crate::logmodel::Intent;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried at each split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 50,
            max_depth: None,
            min_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    classes: Vec<Intent>,
}

/// `ceil(sqrt(d))`, computed without floating point.
pub fn default_max_features(d: usize) -> usize {
    let mut k = 0;
    while k * k < d {
        k += 1;
    }
    k.max(1)
}

impl RandomForest {
    /// Each tree draws its bootstrap sample and split features from its own
    /// stream derived from `seed` and the tree index.
    pub fn fit(x: &[Vec<f64>], y: &[Intent], params: ForestParams, seed: u64) -> RandomForest {
        let n = x.len();
        let d = x.first().map_or(0, Vec::len);
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
        };
        let max_features = params.max_features.unwrap_or_else(|| default_max_features(d));
        let trees = (0..params.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(seed, &[seed::stream::FIT, t as u64]);
                let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let sampler = FeatureSampler {
                    max_features,
                    rng: &mut rng,
                };
                DecisionTree::fit_rows(x, y, rows, tree_params, Some(sampler))
            })
            .collect();
        RandomForest {
            trees,
            classes: present_classes(y.iter().copied()),
        }
    }

    /// Vote counts per class, in class order.
    pub fn votes(&self, x: &[f64]) -> [usize; Intent::COUNT] {
        let mut votes = [0; Intent::COUNT];
        for tree in &self.trees {
            votes[tree.predict(x).index()] += 1;
        }
        votes
    }

    /// Majority vote; ties go to the earlier class.
    pub fn predict(&self, x: &[f64]) -> Intent {
        let votes = self.votes(x).map(|v| v as f64);
        Intent::from_index(argmax(&votes)).expect("class index")
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn classes(&self) -> &[Intent] {
        &self.classes
    }
}
