//! Multinomial logistic regression trained by full-batch gradient descent.
//!
//! The objective is the mean cross-entropy plus `lambda / 2 * |W|^2` (the
//! bias column is not penalized). Step `t` uses the rate
//! `learning_rate / (1 + decay * t)`. Inputs are expected to be standardized.

use serde::{Deserialize, Serialize};

use crate::learn::{argmax, present_classes};
use crate::logmodel::Intent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub lambda: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub decay: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            lambda: 0.01,
            iterations: 500,
            learning_rate: 0.1,
            decay: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    classes: Vec<Intent>,
    /// One row per class in `classes`; the last entry of each row is the bias.
    weights: Vec<Vec<f64>>,
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

impl LogisticRegression {
    pub fn fit(x: &[Vec<f64>], y: &[Intent], params: LogisticParams) -> LogisticRegression {
        let classes = present_classes(y.iter().copied());
        let k = classes.len();
        let d = x.first().map_or(0, Vec::len);
        let n = x.len().max(1) as f64;
        let target: Vec<usize> = y
            .iter()
            .map(|l| classes.iter().position(|c| c == l).expect("present class"))
            .collect();
        let mut w = vec![vec![0.0; d + 1]; k];
        let mut grad = vec![vec![0.0; d + 1]; k];
        let mut p = vec![0.0; k];
        for t in 0..params.iterations {
            grad.iter_mut().for_each(|g| g.fill(0.0));
            for (row, &truth) in x.iter().zip(&target) {
                for (c, pc) in p.iter_mut().enumerate() {
                    *pc = dot_with_bias(&w[c], row);
                }
                softmax_in_place(&mut p);
                for (c, g) in grad.iter_mut().enumerate() {
                    let err = p[c] - if c == truth { 1.0 } else { 0.0 };
                    for (gj, xj) in g.iter_mut().zip(row) {
                        *gj += err * xj;
                    }
                    g[d] += err;
                }
            }
            let eta = params.learning_rate / (1.0 + params.decay * t as f64);
            for (wc, gc) in w.iter_mut().zip(&grad) {
                for j in 0..=d {
                    let penalty = if j < d { params.lambda * wc[j] } else { 0.0 };
                    wc[j] -= eta * (gc[j] / n + penalty);
                }
            }
        }
        LogisticRegression { classes, weights: w }
    }

    /// Class probabilities, aligned with `classes()`.
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = self.weights.iter().map(|w| dot_with_bias(w, x)).collect();
        softmax_in_place(&mut z);
        z
    }

    pub fn predict(&self, x: &[f64]) -> Intent {
        let scores: Vec<f64> = self.weights.iter().map(|w| dot_with_bias(w, x)).collect();
        self.classes[argmax(&scores)]
    }

    pub fn classes(&self) -> &[Intent] {
        &self.classes
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }
}

fn dot_with_bias(w: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d]
}
