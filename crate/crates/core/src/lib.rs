//! Intent classification of web search missions.
//!
//! The pipeline reads query and click logs ([`ingest`]), groups them into
//! logical sessions and missions ([`logmodel`]), turns each unit into a
//! 22-value interaction profile ([`features`]), trains and cross-validates
//! classifiers ([`learn`]) and scores them ([`eval`]).

pub mod eval;
pub mod experiment;
pub mod features;
pub mod ingest;
pub mod learn;
pub mod logmodel;
pub mod seed;

pub use eval::{EvalReport, FeatureRank};
pub use features::{FeatureVector, Granularity, FEATURE_COUNT, FEATURE_NAMES};
pub use ingest::LogCorpus;
pub use learn::{Algorithm, LabeledDataset, Model, ModelSpec};
pub use logmodel::{Intent, IntentLabel};
