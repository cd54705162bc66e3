//! One-vs-rest linear SVM trained with Pegasos-style subgradient steps.
//!
//! Each binary problem minimizes `lambda/2 |w|^2 + mean hinge loss` with
//! `lambda = 1 / (C * n)`. Rows are visited in their given order, once per
//! epoch, with step `1 / (lambda * t)`. The bias is learned as the weight of
//! an extra constant input equal to 1.

use serde::{Deserialize, Serialize};

use crate::learn::{argmax, present_classes};
use crate::logmodel::Intent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, epochs: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    classes: Vec<Intent>,
    /// One row per class; the last entry is the bias.
    weights: Vec<Vec<f64>>,
}

fn decision(w: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d]
}

fn train_binary(x: &[Vec<f64>], positive: &[bool], params: SvmParams) -> Vec<f64> {
    let d = x.first().map_or(0, Vec::len);
    let lambda = 1.0 / (params.c * x.len() as f64);
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; d + 1];
    let mut t = 0usize;
    for _ in 0..params.epochs {
        for (row, &pos) in x.iter().zip(positive) {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let label = if pos { 1.0 } else { -1.0 };
            let margin = label * decision(&w, row);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(row) {
                    *wj += eta * label * xj;
                }
                w[d] += eta * label;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
        }
    }
    w
}

impl LinearSvm {
    pub fn fit(x: &[Vec<f64>], y: &[Intent], params: SvmParams) -> LinearSvm {
        let classes = present_classes(y.iter().copied());
        let weights = classes
            .iter()
            .map(|c| {
                let positive: Vec<bool> = y.iter().map(|l| l == c).collect();
                train_binary(x, &positive, params)
            })
            .collect();
        LinearSvm { classes, weights }
    }

    /// Builds a model from explicit weights (bias last in each row).
    ///
    /// Panics if the row count differs from the class count.
    pub fn from_parts(classes: Vec<Intent>, weights: Vec<Vec<f64>>) -> LinearSvm {
        assert_eq!(classes.len(), weights.len(), "one weight row per class");
        LinearSvm { classes, weights }
    }

    /// Decision values aligned with `classes()`.
    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        self.weights.iter().map(|w| decision(w, x)).collect()
    }

    /// Class with the largest decision value; ties go to the earlier class.
    pub fn predict(&self, x: &[f64]) -> Intent {
        self.classes[argmax(&self.decision_values(x))]
    }

    pub fn classes(&self) -> &[Intent] {
        &self.classes
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }
}
