//! Classifiers, hyperparameter grids and cross-validation.

pub mod dataset;
pub mod forest;
pub mod logistic;
pub mod scaling;
pub mod svm;
pub mod tree;
pub mod validation;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;
use crate::logmodel::Intent;

pub use dataset::{LabeledDataset, LabeledRow};
pub use forest::{ForestParams, RandomForest};
pub use logistic::{LogisticParams, LogisticRegression};
pub use scaling::Standardizer;
pub use svm::{LinearSvm, SvmParams};
pub use tree::{DecisionTree, TreeParams};
pub use validation::{
    balance, compare_granularity, cross_validate, grid_search, stratified_folds, CvConfig,
    GranularityComparison,
};

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("training set is empty")]
    EmptyTraining,
    #[error("training set contains only the class `{0}`")]
    SingleClass(Intent),
    #[error("non-finite value in row {row}, feature {feature}")]
    NonFinite { row: usize, feature: usize },
    #[error("duplicate unit id `{0}`")]
    DuplicateUnit(String),
    #[error("class `{class}` has {count} rows, fewer than the {folds} folds requested")]
    ClassTooSmall {
        class: Intent,
        count: usize,
        folds: usize,
    },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("model serialization: {0}")]
    Serialization(String),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    DecisionTree,
    RandomForest,
    LogisticRegression,
    LinearSvm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::DecisionTree,
        Algorithm::LogisticRegression,
        Algorithm::LinearSvm,
        Algorithm::RandomForest,
    ];

    /// Short name used on the command line and in tables.
    pub fn short_name(self) -> &'static str {
        match self {
            Algorithm::DecisionTree => "DT",
            Algorithm::RandomForest => "RF",
            Algorithm::LogisticRegression => "LR",
            Algorithm::LinearSvm => "SVM",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dt" | "tree" | "decision_tree" | "decisiontree" => Ok(Algorithm::DecisionTree),
            "rf" | "forest" | "random_forest" | "randomforest" => Ok(Algorithm::RandomForest),
            "lr" | "logistic" | "logistic_regression" | "logisticregression" => {
                Ok(Algorithm::LogisticRegression)
            }
            "svm" | "linear_svm" | "linearsvm" => Ok(Algorithm::LinearSvm),
            other => Err(format!("unknown algorithm `{other}` (dt|rf|lr|svm)")),
        }
    }
}

/// One point of a hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum Hyperparams {
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
    LogisticRegression(LogisticParams),
    LinearSvm(SvmParams),
}

impl Hyperparams {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Hyperparams::DecisionTree(_) => Algorithm::DecisionTree,
            Hyperparams::RandomForest(_) => Algorithm::RandomForest,
            Hyperparams::LogisticRegression(_) => Algorithm::LogisticRegression,
            Hyperparams::LinearSvm(_) => Algorithm::LinearSvm,
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |msg: &str| Err(LearnError::InvalidHyperparams(msg.to_string()));
        match self {
            Hyperparams::DecisionTree(p) if p.min_leaf == 0 => bad("min_leaf must be at least 1"),
            Hyperparams::RandomForest(p) if p.trees == 0 => bad("a forest needs at least one tree"),
            Hyperparams::RandomForest(p) if p.min_leaf == 0 => bad("min_leaf must be at least 1"),
            Hyperparams::RandomForest(ForestParams {
                max_features: Some(0),
                ..
            }) => bad("max_features must be at least 1"),
            Hyperparams::LogisticRegression(p) => {
                if !(p.lambda.is_finite() && p.lambda >= 0.0) {
                    bad("lambda must be finite and non-negative")
                } else if !(p.learning_rate.is_finite() && p.learning_rate > 0.0) {
                    bad("learning_rate must be positive")
                } else if !(p.decay.is_finite() && p.decay >= 0.0) {
                    bad("decay must be non-negative")
                } else if p.iterations == 0 {
                    bad("iterations must be at least 1")
                } else {
                    Ok(())
                }
            }
            Hyperparams::LinearSvm(p) => {
                if !(p.c.is_finite() && p.c > 0.0) {
                    bad("C must be finite and positive")
                } else if p.epochs == 0 {
                    bad("epochs must be at least 1")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Hyperparams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let depth = |d: Option<usize>| d.map_or("inf".to_string(), |d| d.to_string());
        match self {
            Hyperparams::DecisionTree(p) => {
                write!(f, "max_depth={} min_leaf={}", depth(p.max_depth), p.min_leaf)
            }
            Hyperparams::RandomForest(p) => {
                write!(f, "trees={} max_depth={}", p.trees, depth(p.max_depth))
            }
            Hyperparams::LogisticRegression(p) => {
                write!(f, "lambda={} iterations={}", p.lambda, p.iterations)
            }
            Hyperparams::LinearSvm(p) => write!(f, "C={} epochs={}", p.c, p.epochs),
        }
    }
}

/// The default search grid of an algorithm, in declaration order.
pub fn default_grid(algorithm: Algorithm) -> Vec<Hyperparams> {
    match algorithm {
        Algorithm::DecisionTree => {
            let mut grid = Vec::new();
            for max_depth in [Some(3), Some(5), Some(8), None] {
                for min_leaf in [1, 5, 20] {
                    grid.push(Hyperparams::DecisionTree(TreeParams { max_depth, min_leaf }));
                }
            }
            grid
        }
        Algorithm::RandomForest => {
            let mut grid = Vec::new();
            for trees in [50, 200] {
                for max_depth in [Some(8), None] {
                    grid.push(Hyperparams::RandomForest(ForestParams {
                        trees,
                        max_depth,
                        ..ForestParams::default()
                    }));
                }
            }
            grid
        }
        Algorithm::LogisticRegression => [0.001, 0.01, 0.1, 1.0]
            .into_iter()
            .map(|lambda| {
                Hyperparams::LogisticRegression(LogisticParams {
                    lambda,
                    ..LogisticParams::default()
                })
            })
            .collect(),
        Algorithm::LinearSvm => [0.01, 0.1, 1.0, 10.0]
            .into_iter()
            .map(|c| {
                Hyperparams::LinearSvm(SvmParams {
                    c,
                    ..SvmParams::default()
                })
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub params: Hyperparams,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(params: Hyperparams, seed: u64) -> Self {
        ModelSpec { params, seed }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.params.algorithm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    LogisticRegression(LogisticRegression),
    LinearSvm(LinearSvm),
}

pub const MODEL_FORMAT: &str = "mission-intent-model";
pub const MODEL_VERSION: u32 = 1;

/// A fitted classifier together with everything needed to apply it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format: String,
    pub version: u32,
    pub spec: ModelSpec,
    /// Classes present in the training data, in fixed class order.
    pub classes: Vec<Intent>,
    /// Present for the linear models, which see standardized inputs.
    pub scaling: Option<Standardizer>,
    pub classifier: Classifier,
}

impl Model {
    pub fn algorithm(&self) -> Algorithm {
        self.spec.algorithm()
    }

    pub fn predict(&self, x: &FeatureVector) -> Intent {
        self.predict_row(&x.to_array())
    }

    pub fn predict_row(&self, x: &[f64]) -> Intent {
        let scaled;
        let x = match &self.scaling {
            Some(s) => {
                scaled = s.transform(x);
                &scaled[..]
            }
            None => x,
        };
        match &self.classifier {
            Classifier::DecisionTree(m) => m.predict(x),
            Classifier::RandomForest(m) => m.predict(x),
            Classifier::LogisticRegression(m) => m.predict(x),
            Classifier::LinearSvm(m) => m.predict(x),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Model, LearnError> {
        let model: Model =
            serde_json::from_str(text).map_err(|e| LearnError::Serialization(e.to_string()))?;
        if model.format != MODEL_FORMAT {
            return Err(LearnError::Serialization(format!(
                "unexpected format tag `{}`",
                model.format
            )));
        }
        if model.version != MODEL_VERSION {
            return Err(LearnError::Serialization(format!(
                "unsupported model version {}",
                model.version
            )));
        }
        Ok(model)
    }
}

/// Sorted, deduplicated classes of an iterator of labels.
pub(crate) fn present_classes(labels: impl Iterator<Item = Intent>) -> Vec<Intent> {
    let counts = dataset::class_counts(labels);
    Intent::ALL
        .into_iter()
        .filter(|c| counts[c.index()] > 0)
        .collect()
}

/// Index of the first maximum. NaN never wins.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] || values[best].is_nan() && !v.is_nan() {
            best = i;
        }
    }
    best
}

pub fn fit(spec: &ModelSpec, train: &LabeledDataset) -> Result<Model, LearnError> {
    fit_arrays(spec, &train.matrix(), &train.labels())
}

/// Fits on a raw feature matrix.
///
/// Rows are put into a canonical order first, so the fitted model does not
/// depend on the order in which training rows are given.
pub fn fit_arrays(spec: &ModelSpec, x: &[Vec<f64>], y: &[Intent]) -> Result<Model, LearnError> {
    assert_eq!(x.len(), y.len(), "feature and label counts differ");
    spec.params.validate()?;
    if x.is_empty() {
        return Err(LearnError::EmptyTraining);
    }
    for (r, row) in x.iter().enumerate() {
        if let Some(f) = row.iter().position(|v| !v.is_finite()) {
            return Err(LearnError::NonFinite { row: r, feature: f });
        }
    }
    let classes = present_classes(y.iter().copied());
    if classes.len() < 2 {
        return Err(LearnError::SingleClass(classes[0]));
    }

    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        y[a].cmp(&y[b]).then_with(|| {
            x[a].iter()
                .zip(&x[b])
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let x: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
    let y: Vec<Intent> = order.iter().map(|&i| y[i]).collect();

    let (scaling, classifier) = match spec.params {
        Hyperparams::DecisionTree(p) => (None, Classifier::DecisionTree(DecisionTree::fit(&x, &y, p))),
        Hyperparams::RandomForest(p) => (
            None,
            Classifier::RandomForest(RandomForest::fit(&x, &y, p, spec.seed)),
        ),
        Hyperparams::LogisticRegression(p) => {
            let s = Standardizer::fit(&x);
            let z = s.transform_all(&x);
            (
                Some(s),
                Classifier::LogisticRegression(LogisticRegression::fit(&z, &y, p)),
            )
        }
        Hyperparams::LinearSvm(p) => {
            let s = Standardizer::fit(&x);
            let z = s.transform_all(&x);
            (Some(s), Classifier::LinearSvm(LinearSvm::fit(&z, &y, p)))
        }
    };
    Ok(Model {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        spec: *spec,
        classes,
        scaling,
        classifier,
    })
}

pub fn predict(model: &Model, x: &FeatureVector) -> Intent {
    model.predict(x)
}
