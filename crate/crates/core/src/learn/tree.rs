//! CART classification tree with Gini impurity.
//!
//! Thresholds are midpoints between consecutive distinct feature values and
//! a sample goes left when `x[feature] <= threshold`. Among equally good
//! splits the lowest feature index wins, then the lowest threshold. A node is
//! split whenever it is impure, below the depth limit and some split leaves at
//! least `min_leaf` samples on each side, even if that split does not lower
//! the impurity.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::learn::dataset::class_counts;
use crate::learn::present_classes;
use crate::logmodel::Intent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        class: Intent,
        counts: [usize; Intent::COUNT],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    classes: Vec<Intent>,
}

/// Random feature subsampling at each split, as used by random forests.
pub(crate) struct FeatureSampler<'r> {
    pub max_features: usize,
    pub rng: &'r mut ChaCha8Rng,
}

struct Builder<'a, 'r> {
    x: &'a [Vec<f64>],
    y: &'a [Intent],
    params: TreeParams,
    n_features: usize,
    sampler: Option<FeatureSampler<'r>>,
    nodes: Vec<Node>,
}

struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
    split_at: usize,
    order: Vec<usize>,
}

/// Majority class, ties to the earliest class.
fn majority(counts: &[usize; Intent::COUNT]) -> Intent {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    Intent::from_index(best).expect("class index")
}

/// `n * weighted Gini` of a two-way partition.
fn split_score(left: &[usize; 3], right: &[usize; 3]) -> f64 {
    let part = |c: &[usize; 3]| {
        let n: usize = c.iter().sum();
        if n == 0 {
            return 0.0;
        }
        let sq: f64 = c.iter().map(|&k| (k * k) as f64).sum();
        n as f64 - sq / n as f64
    };
    part(left) + part(right)
}

pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi || mid < lo {
        lo
    } else {
        mid
    }
}

impl Builder<'_, '_> {
    fn best_split_on(&self, feature: usize, indices: &[usize], best: &mut Option<Candidate>) {
        let mut order = indices.to_vec();
        order.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]).then(a.cmp(&b)));
        let total = class_counts(order.iter().map(|&i| self.y[i]));
        let mut left = [0usize; 3];
        let n = order.len();
        let min_leaf = self.params.min_leaf.max(1);
        let mut local: Option<(f64, f64, usize)> = None;
        for pos in 0..n - 1 {
            left[self.y[order[pos]].index()] += 1;
            let (lo, hi) = (self.x[order[pos]][feature], self.x[order[pos + 1]][feature]);
            if lo >= hi || pos + 1 < min_leaf || n - pos - 1 < min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1], total[2] - left[2]];
            let score = split_score(&left, &right);
            if local.is_none_or(|(s, _, _)| score < s - 1e-12) {
                local = Some((score, midpoint(lo, hi), pos + 1));
            }
        }
        if let Some((score, threshold, split_at)) = local {
            if best.as_ref().is_none_or(|b| score < b.score - 1e-12) {
                *best = Some(Candidate {
                    score,
                    feature,
                    threshold,
                    split_at,
                    order,
                });
            }
        }
    }

    fn find_split(&mut self, indices: &[usize]) -> Option<Candidate> {
        let mut best = None;
        match self.sampler.as_mut() {
            None => {
                for f in 0..self.n_features {
                    self.best_split_on(f, indices, &mut best);
                }
            }
            Some(sampler) => {
                let mut features: Vec<usize> = (0..self.n_features).collect();
                features.shuffle(sampler.rng);
                let quota = sampler.max_features.clamp(1, self.n_features.max(1));
                let (first, rest) = features.split_at(quota.min(features.len()));
                let mut first = first.to_vec();
                // evaluation order does not matter for the result except on
                // ties, which go to the lowest index
                first.sort_unstable();
                for &f in &first {
                    self.best_split_on(f, indices, &mut best);
                }
                // keep drawing features until one admits a split
                for &f in rest {
                    if best.is_some() {
                        break;
                    }
                    self.best_split_on(f, indices, &mut best);
                }
            }
        }
        best
    }

    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let counts = class_counts(indices.iter().map(|&i| self.y[i]));
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class: majority(&counts),
            counts,
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_left = self.params.max_depth.is_none_or(|d| depth < d);
        if pure || !depth_left || indices.len() < 2 * self.params.min_leaf.max(1) {
            return id;
        }
        let Some(split) = self.find_split(&indices) else {
            return id;
        };
        let (l, r) = split.order.split_at(split.split_at);
        let left = self.grow(l.to_vec(), depth + 1);
        let right = self.grow(r.to_vec(), depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    /// Fits on all rows. Unlike the top-level `fit`, a single-class training
    /// set is accepted and yields a one-leaf tree.
    ///
    /// Panics if `x` is empty.
    pub fn fit(x: &[Vec<f64>], y: &[Intent], params: TreeParams) -> DecisionTree {
        Self::fit_rows(x, y, (0..x.len()).collect(), params, None)
    }

    pub(crate) fn fit_rows(
        x: &[Vec<f64>],
        y: &[Intent],
        rows: Vec<usize>,
        params: TreeParams,
        sampler: Option<FeatureSampler<'_>>,
    ) -> DecisionTree {
        assert!(!rows.is_empty(), "cannot fit a tree on zero rows");
        let mut builder = Builder {
            x,
            y,
            params,
            n_features: x[0].len(),
            sampler,
            nodes: Vec::new(),
        };
        builder.grow(rows.clone(), 0);
        DecisionTree {
            nodes: builder.nodes,
            classes: present_classes(rows.iter().map(|&i| y[i])),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Intent {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { class, .. } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn classes(&self) -> &[Intent] {
        &self.classes
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Length of the longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
