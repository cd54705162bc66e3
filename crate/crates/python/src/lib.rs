//! Python bindings for the `mission_intent` crate.

use std::path::PathBuf;

use mission_intent::eval::{rank_features_with, Discretization};
use mission_intent::features::featurize_corpus;
use mission_intent::features::text::{char_ngram_cosine as cosine, levenshtein as edit_distance};
use mission_intent::ingest::synthetic::{generate_synthetic_corpus, SyntheticSpec};
use mission_intent::learn::{
    cross_validate as run_cv, default_grid, fit_arrays, CvConfig, ForestParams, Hyperparams, LabeledRow,
    LogisticParams, SvmParams, TreeParams,
};
use mission_intent::{
    Algorithm, FeatureVector, Granularity, Intent, LabeledDataset, LogCorpus, ModelSpec, FEATURE_COUNT,
    FEATURE_NAMES,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn granularity(name: &str) -> PyResult<Granularity> {
    name.parse().map_err(value_error)
}

fn algorithm(name: &str) -> PyResult<Algorithm> {
    name.parse().map_err(value_error)
}

fn feature_array(row: &[f64]) -> PyResult<[f64; FEATURE_COUNT]> {
    row.try_into().map_err(|_| {
        value_error(format!(
            "expected {FEATURE_COUNT} feature values, got {}",
            row.len()
        ))
    })
}

type FeatureRowTuple = (String, Option<String>, Vec<f64>);

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// A parsed log: missions, their logical sessions, queries and clicks.
#[pyclass(module = "mission_intent_py", frozen)]
struct Corpus {
    inner: LogCorpus,
}

#[pymethods]
impl Corpus {
    /// Generates a labeled synthetic corpus with `per_class` missions of each intent.
    #[staticmethod]
    #[pyo3(signature = (per_class, seed = 42))]
    fn synthetic(per_class: usize, seed: u64) -> Self {
        Corpus {
            inner: generate_synthetic_corpus(&SyntheticSpec::balanced(per_class, seed)),
        }
    }

    /// Reads `queries.tsv` plus the optional `clicks.tsv` and `labels.tsv`.
    #[staticmethod]
    fn read_dir(path: PathBuf) -> PyResult<Self> {
        let (inner, _missing) = LogCorpus::read_tsv_dir(&path).map_err(value_error)?;
        Ok(Corpus { inner })
    }

    fn write_dir(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_tsv_dir(&path).map_err(value_error)
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.stats();
        let d = PyDict::new(py);
        d.set_item("queries", s.queries)?;
        d.set_item("users", s.users)?;
        d.set_item("logical_sessions", s.logical_sessions)?;
        d.set_item("missions", s.missions)?;
        Ok(d)
    }

    fn mission_ids(&self) -> Vec<String> {
        self.inner.missions().map(|m| m.id.clone()).collect()
    }

    /// Feature rows as `(unit_id, label or None, values)`.
    #[pyo3(signature = (granularity = "mission"))]
    fn featurize(&self, granularity: &str) -> PyResult<Vec<FeatureRowTuple>> {
        let g = self::granularity(granularity)?;
        Ok(featurize_corpus(&self.inner, g)
            .into_iter()
            .map(|r| {
                (
                    r.unit_id,
                    r.label.map(|l| l.to_string()),
                    r.features.to_array().to_vec(),
                )
            })
            .collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Corpus({})", self.inner.stats())
    }
}

/// Feature rows with one definite intent each.
#[pyclass(module = "mission_intent_py", frozen)]
struct Dataset {
    inner: LabeledDataset,
}

#[pymethods]
impl Dataset {
    #[new]
    #[pyo3(signature = (unit_ids, features, labels, granularity = "mission"))]
    fn new(
        unit_ids: Vec<String>,
        features: Vec<Vec<f64>>,
        labels: Vec<String>,
        granularity: &str,
    ) -> PyResult<Self> {
        if unit_ids.len() != features.len() || unit_ids.len() != labels.len() {
            return Err(value_error("unit_ids, features and labels differ in length"));
        }
        let mut rows = Vec::with_capacity(unit_ids.len());
        for ((unit_id, x), label) in unit_ids.into_iter().zip(features).zip(labels) {
            rows.push(LabeledRow {
                unit_id,
                features: FeatureVector::from_array(feature_array(&x)?),
                label: label.parse::<Intent>().map_err(value_error)?,
            });
        }
        let inner = LabeledDataset::new(rows, self::granularity(granularity)?).map_err(value_error)?;
        Ok(Dataset { inner })
    }

    /// Labeled units of a corpus; unlabeled and ambiguous ones are dropped.
    #[staticmethod]
    #[pyo3(signature = (corpus, granularity = "mission"))]
    fn from_corpus(corpus: &Corpus, granularity: &str) -> PyResult<Self> {
        let inner = LabeledDataset::from_corpus(&corpus.inner, self::granularity(granularity)?)
            .map_err(value_error)?;
        Ok(Dataset { inner })
    }

    fn unit_ids(&self) -> Vec<String> {
        self.inner.rows().iter().map(|r| r.unit_id.clone()).collect()
    }

    fn features(&self) -> Vec<Vec<f64>> {
        self.inner.matrix()
    }

    fn labels(&self) -> Vec<&'static str> {
        self.inner.labels().into_iter().map(Intent::as_str).collect()
    }

    fn class_counts(&self) -> Vec<(&'static str, usize)> {
        let counts = self.inner.class_counts();
        Intent::ALL
            .iter()
            .map(|i| (i.as_str(), counts[i.index()]))
            .collect()
    }

    #[getter]
    fn granularity(&self) -> &'static str {
        self.inner.granularity().as_str()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// A fitted classifier.
#[pyclass(module = "mission_intent_py", frozen)]
struct Model {
    inner: mission_intent::Model,
}

#[pymethods]
impl Model {
    /// Fits `algorithm` (dt, rf, lr or svm). `params` is an optional JSON
    /// object of hyperparameters; missing keys take their defaults.
    #[staticmethod]
    #[pyo3(signature = (algorithm, dataset, seed = 42, params = None))]
    fn fit(algorithm: &str, dataset: &Dataset, seed: u64, params: Option<&str>) -> PyResult<Self> {
        let params = hyperparams(self::algorithm(algorithm)?, params)?;
        let data = &dataset.inner;
        let inner =
            fit_arrays(&ModelSpec::new(params, seed), &data.matrix(), &data.labels()).map_err(value_error)?;
        Ok(Model { inner })
    }

    fn predict(&self, features: Vec<f64>) -> PyResult<&'static str> {
        Ok(self.inner.predict_row(&feature_array(&features)?).as_str())
    }

    fn predict_many(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<&'static str>> {
        rows.iter()
            .map(|r| Ok(self.inner.predict_row(&feature_array(r)?).as_str()))
            .collect()
    }

    #[getter]
    fn algorithm(&self) -> &'static str {
        self.inner.algorithm().short_name()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = mission_intent::Model::from_json(text).map_err(value_error)?;
        Ok(Model { inner })
    }

    fn __repr__(&self) -> String {
        format!("Model({}, {})", self.inner.algorithm(), self.inner.spec.params)
    }
}

fn hyperparams(algorithm: Algorithm, params: Option<&str>) -> PyResult<Hyperparams> {
    let parse = |text: &str| -> PyResult<Hyperparams> {
        let p = match algorithm {
            Algorithm::DecisionTree => Hyperparams::DecisionTree(serde_from(text)?),
            Algorithm::RandomForest => Hyperparams::RandomForest(serde_from(text)?),
            Algorithm::LogisticRegression => Hyperparams::LogisticRegression(serde_from(text)?),
            Algorithm::LinearSvm => Hyperparams::LinearSvm(serde_from(text)?),
        };
        p.validate().map_err(value_error)?;
        Ok(p)
    };
    match params {
        Some(text) => parse(text),
        None => Ok(match algorithm {
            Algorithm::DecisionTree => Hyperparams::DecisionTree(TreeParams::default()),
            Algorithm::RandomForest => Hyperparams::RandomForest(ForestParams::default()),
            Algorithm::LogisticRegression => Hyperparams::LogisticRegression(LogisticParams::default()),
            Algorithm::LinearSvm => Hyperparams::LinearSvm(SvmParams::default()),
        }),
    }
}

fn serde_from<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(value_error)
}

/// Nested cross-validation over the algorithm's default grid; returns the
/// report as a dict.
#[pyfunction]
#[pyo3(signature = (dataset, algorithm, folds = 10, inner_folds = 3, balanced = false, seed = 42))]
fn cross_validate<'py>(
    py: Python<'py>,
    dataset: &Dataset,
    algorithm: &str,
    folds: usize,
    inner_folds: usize,
    balanced: bool,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let grid = default_grid(self::algorithm(algorithm)?);
    let config = CvConfig {
        folds,
        inner_folds,
        balanced,
        seed,
    };
    let report = py
        .detach(|| run_cv(&grid, &dataset.inner, &config))
        .map_err(value_error)?;
    json_to_py(py, &report.to_json())
}

/// `(feature, information gain)` pairs, best first. With `bins` set the
/// features use equal-frequency bins instead of MDL cut points.
#[pyfunction]
#[pyo3(signature = (dataset, bins = None))]
fn rank_features(dataset: &Dataset, bins: Option<usize>) -> Vec<(String, f64)> {
    let method = bins.map_or(Discretization::Mdl, Discretization::EqualFrequency);
    rank_features_with(&dataset.inner, method)
        .into_iter()
        .map(|r| (r.feature, r.information_gain))
        .collect()
}

#[pyfunction]
fn levenshtein(a: &str, b: &str) -> usize {
    edit_distance(a, b)
}

#[pyfunction]
#[pyo3(signature = (a, b, n = 3))]
fn char_ngram_cosine(a: &str, b: &str, n: usize) -> f64 {
    cosine(a, b, n)
}

#[pymodule]
fn mission_intent_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Corpus>()?;
    m.add_class::<Dataset>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    m.add_function(wrap_pyfunction!(rank_features, m)?)?;
    m.add_function(wrap_pyfunction!(levenshtein, m)?)?;
    m.add_function(wrap_pyfunction!(char_ngram_cosine, m)?)?;
    m.add("FEATURE_NAMES", FEATURE_NAMES.to_vec())?;
    m.add("FEATURE_COUNT", FEATURE_COUNT)?;
    Ok(())
}
