//! Stratified cross-validation with nested grid search.
//!
//! For each outer fold the training part is optionally undersampled to equal
//! class sizes, a grid point is chosen by inner stratified cross-validation on
//! that training part alone, and the refitted model predicts the untouched
//! held-out rows. Predictions from all folds are pooled into one report.

use rand::seq::{IndexedRandom, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::{EvalReport, FoldSummary, Prediction, RunConfig};
use crate::features::Granularity;
use crate::ingest::LogCorpus;
use crate::learn::dataset::class_counts;
use crate::learn::{fit_arrays, Hyperparams, LabeledDataset, LearnError, ModelSpec};
use crate::logmodel::Intent;
use crate::seed::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub inner_folds: usize,
    pub balanced: bool,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            inner_folds: 3,
            balanced: false,
            seed: 42,
        }
    }
}

/// Splits row indices into `folds` stratified folds.
///
/// Each class is shuffled, then its members are dealt to folds round-robin
/// with one counter shared across classes, so fold sizes differ by at most
/// one overall and per class. Indices inside a fold are ascending.
pub fn stratified_folds(labels: &[Intent], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>, LearnError> {
    if folds < 2 {
        return Err(LearnError::InvalidHyperparams(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    let counts = class_counts(labels.iter().copied());
    for class in Intent::ALL {
        let count = counts[class.index()];
        if count > 0 && count < folds {
            return Err(LearnError::ClassTooSmall { class, count, folds });
        }
    }
    let mut rng = seed::rng(seed, &[stream::FOLDS]);
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for class in Intent::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            out[next % folds].push(i);
            next += 1;
        }
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    Ok(out)
}

/// Undersamples `rows` without replacement so that every class present has
/// as many rows as the smallest one. The result is in ascending row order.
pub fn balance_rows(labels: &[Intent], rows: &[usize], seed: u64) -> Vec<usize> {
    let counts = class_counts(rows.iter().map(|&i| labels[i]));
    let Some(minority) = counts.iter().copied().filter(|&c| c > 0).min() else {
        return Vec::new();
    };
    let mut rng = seed::rng(seed, &[stream::BALANCE]);
    let mut kept = Vec::with_capacity(minority * Intent::COUNT);
    for class in Intent::ALL {
        let members: Vec<usize> = rows.iter().copied().filter(|&i| labels[i] == class).collect();
        kept.extend(members.choose_multiple(&mut rng, minority).copied());
    }
    kept.sort_unstable();
    kept
}

pub fn balance(train: &LabeledDataset, seed: u64) -> LabeledDataset {
    let rows: Vec<usize> = (0..train.len()).collect();
    train.subset(&balance_rows(&train.labels(), &rows, seed))
}

fn check_grid(grid: &[Hyperparams]) -> Result<(), LearnError> {
    let first = grid.first().ok_or(LearnError::EmptyGrid)?;
    for point in grid {
        point.validate()?;
        if point.algorithm() != first.algorithm() {
            return Err(LearnError::InvalidHyperparams(
                "grid mixes algorithms".to_string(),
            ));
        }
    }
    Ok(())
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Returns the grid index with the best pooled inner accuracy.
fn select(
    grid: &[Hyperparams],
    x: &[Vec<f64>],
    y: &[Intent],
    inner_folds: usize,
    seed: u64,
) -> Result<usize, LearnError> {
    check_grid(grid)?;
    if grid.len() == 1 {
        return Ok(0);
    }
    let smallest = class_counts(y.iter().copied())
        .into_iter()
        .filter(|&c| c > 0)
        .min()
        .unwrap_or(0);
    let k = inner_folds.min(smallest);
    if k < 2 {
        return Ok(0);
    }
    let folds = stratified_folds(y, k, seed)?;
    let scores = grid
        .par_iter()
        .enumerate()
        .map(|(g, params)| -> Result<usize, LearnError> {
            let mut correct = 0;
            for (f, test) in folds.iter().enumerate() {
                let train: Vec<usize> = (0..y.len()).filter(|i| test.binary_search(i).is_err()).collect();
                let spec = ModelSpec::new(*params, seed::derive(seed, &[stream::FIT, g as u64, f as u64]));
                let model = fit_arrays(&spec, &pick(x, &train), &pick(y, &train))?;
                correct += test.iter().filter(|&&i| model.predict_row(&x[i]) == y[i]).count();
            }
            Ok(correct)
        })
        .collect::<Result<Vec<usize>, LearnError>>()?;
    let mut best = 0;
    for (g, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = g;
        }
    }
    Ok(best)
}

/// Chooses a grid point by inner stratified cross-validation accuracy on
/// `train`. Ties go to the earlier point. When the smallest class has fewer
/// rows than `inner_folds`, that many folds are used instead; below two the
/// first point is returned.
pub fn grid_search(
    grid: &[Hyperparams],
    train: &LabeledDataset,
    inner_folds: usize,
    seed: u64,
) -> Result<ModelSpec, LearnError> {
    let g = select(grid, &train.matrix(), &train.labels(), inner_folds, seed)?;
    Ok(ModelSpec::new(grid[g], seed::derive(seed, &[stream::FIT])))
}

struct FoldOutcome {
    summary: FoldSummary,
    predicted: Vec<(usize, Intent)>,
}

pub fn cross_validate(
    grid: &[Hyperparams],
    data: &LabeledDataset,
    config: &CvConfig,
) -> Result<EvalReport, LearnError> {
    check_grid(grid)?;
    let x = data.matrix();
    let y = data.labels();
    let folds = stratified_folds(&y, config.folds, config.seed)?;
    let outcomes = folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| -> Result<FoldOutcome, LearnError> {
            let fold_seed = seed::derive(config.seed, &[stream::GRID, f as u64]);
            let train: Vec<usize> = (0..y.len()).filter(|i| test.binary_search(i).is_err()).collect();
            let used = if config.balanced {
                balance_rows(
                    &y,
                    &train,
                    seed::derive(config.seed, &[stream::BALANCE, f as u64]),
                )
            } else {
                train.clone()
            };
            let (tx, ty) = (pick(&x, &used), pick(&y, &used));
            let g = select(grid, &tx, &ty, config.inner_folds, fold_seed)?;
            let spec = ModelSpec::new(grid[g], seed::derive(fold_seed, &[stream::FIT]));
            let model = fit_arrays(&spec, &tx, &ty)?;
            let predicted: Vec<(usize, Intent)> =
                test.iter().map(|&i| (i, model.predict_row(&x[i]))).collect();
            Ok(FoldOutcome {
                summary: FoldSummary {
                    fold: f,
                    test_counts: class_counts(test.iter().map(|&i| y[i])),
                    train_counts: class_counts(train.iter().map(|&i| y[i])),
                    fitted_counts: class_counts(ty.iter().copied()),
                    selected: grid[g],
                    correct: predicted.iter().filter(|(i, p)| y[*i] == *p).count(),
                },
                predicted,
            })
        })
        .collect::<Result<Vec<FoldOutcome>, LearnError>>()?;

    let mut slots: Vec<Option<(usize, Intent)>> = vec![None; y.len()];
    let mut summaries = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        for &(i, p) in &outcome.predicted {
            slots[i] = Some((outcome.summary.fold, p));
        }
        summaries.push(outcome.summary);
    }
    let predictions = slots
        .into_iter()
        .enumerate()
        .map(|(i, slot)| {
            let (fold, predicted) = slot.expect("every row is tested once");
            Prediction {
                unit_id: data.rows()[i].unit_id.clone(),
                fold,
                truth: y[i],
                predicted,
            }
        })
        .collect();
    let run = RunConfig {
        algorithm: grid[0].algorithm(),
        balanced: config.balanced,
        granularity: data.granularity(),
        seed: config.seed,
        folds: config.folds,
        inner_folds: config.inner_folds,
        grid: grid.to_vec(),
    };
    Ok(EvalReport::from_predictions(run, summaries, predictions)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GranularityComparison {
    pub mission: EvalReport,
    pub logical_session: EvalReport,
}

/// Runs the same pipeline on missions and on logical sessions, where each
/// session carries its mission's label.
pub fn compare_granularity(
    corpus: &LogCorpus,
    grid: &[Hyperparams],
    config: &CvConfig,
) -> Result<GranularityComparison, LearnError> {
    let missions = LabeledDataset::from_corpus(corpus, Granularity::Mission)?;
    let sessions = LabeledDataset::from_corpus(corpus, Granularity::LogicalSession)?;
    Ok(GranularityComparison {
        mission: cross_validate(grid, &missions, config)?,
        logical_session: cross_validate(grid, &sessions, config)?,
    })
}
