//! Classification metrics, evaluation reports and feature ranking.

pub mod infogain;
pub mod metrics;
pub mod report;

pub use infogain::{
    entropy, information_gain, information_gain_of, mdl_cut_points, rank_features, rank_features_with,
    write_ranking_csv, Discretization, FeatureRank,
};
pub use metrics::{metrics, metrics_from_matrix, ClassMetrics, ConfusionMatrix, Metrics, PerClass};
pub use report::{summary_table, write_reports_csv, EvalReport, FoldSummary, Prediction, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("class weights must be non-negative, finite and not all zero")]
    InvalidWeights,
}
