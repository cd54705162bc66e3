//! Information gain of single features against the intent label.
//!
//! Features are discretized before the gain is measured. The default is
//! supervised MDL discretization: recursively pick the boundary that
//! minimizes class entropy and keep it only while the minimum description
//! length criterion accepts it. Entropies are in bits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::{FEATURE_COUNT, FEATURE_NAMES};
use crate::learn::tree::midpoint;
use crate::learn::LabeledDataset;
use crate::logmodel::Intent;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    #[default]
    Mdl,
    /// Equal-frequency bins; the usual diagnostic setting is 10.
    EqualFrequency(usize),
}

/// Shannon entropy in bits of a count vector.
pub fn entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn counts_of(labels: &[Intent]) -> [usize; Intent::COUNT] {
    crate::learn::dataset::class_counts(labels.iter().copied())
}

fn classes_present(counts: &[usize]) -> f64 {
    counts.iter().filter(|&&c| c > 0).count() as f64
}

/// Accepted cut points of `values` for predicting `labels`, ascending.
///
/// Panics if the slices differ in length.
pub fn mdl_cut_points(values: &[f64], labels: &[Intent]) -> Vec<f64> {
    assert_eq!(values.len(), labels.len());
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let v: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let y: Vec<Intent> = order.iter().map(|&i| labels[i]).collect();
    let mut cuts = Vec::new();
    split_range(&v, &y, &mut cuts);
    cuts
}

fn split_range(v: &[f64], y: &[Intent], cuts: &mut Vec<f64>) {
    let n = v.len();
    if n < 2 {
        return;
    }
    let total = counts_of(y);
    let prior = entropy(&total);
    let mut left = [0usize; Intent::COUNT];
    let mut best: Option<(f64, usize, [usize; 3])> = None;
    for i in 0..n - 1 {
        left[y[i].index()] += 1;
        if v[i] >= v[i + 1] {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1], total[2] - left[2]];
        let nl = (i + 1) as f64;
        let nr = (n - i - 1) as f64;
        let e = (nl * entropy(&left) + nr * entropy(&right)) / n as f64;
        if best.is_none_or(|(b, _, _)| e < b) {
            best = Some((e, i + 1, left));
        }
    }
    let Some((split_entropy, at, left)) = best else {
        return;
    };
    let gain = prior - split_entropy;
    if gain <= 0.0 {
        return;
    }
    let right = [total[0] - left[0], total[1] - left[1], total[2] - left[2]];
    let k = classes_present(&total);
    let k1 = classes_present(&left);
    let k2 = classes_present(&right);
    let delta = (3f64.powf(k) - 2.0).log2() - (k * prior - k1 * entropy(&left) - k2 * entropy(&right));
    let nf = n as f64;
    if gain <= ((nf - 1.0).log2() + delta) / nf {
        return;
    }
    split_range(&v[..at], &y[..at], cuts);
    cuts.push(midpoint(v[at - 1], v[at]));
    split_range(&v[at..], &y[at..], cuts);
}

/// Cut points splitting the sorted values into `bins` groups of (nearly)
/// equal size. Equal values never straddle a cut.
pub fn equal_frequency_cut_points(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut cuts: Vec<f64> = Vec::new();
    if bins < 2 || n < 2 {
        return cuts;
    }
    for b in 1..bins {
        let at = b * n / bins;
        if at == 0 || at >= n || sorted[at - 1] >= sorted[at] {
            continue;
        }
        let cut = midpoint(sorted[at - 1], sorted[at]);
        if cuts.last().is_none_or(|&last| cut > last) {
            cuts.push(cut);
        }
    }
    cuts
}

/// `H(class) - H(class | bin)` where bins come from `cuts` (`x <= cut`
/// falls to the left).
fn gain_for_cuts(values: &[f64], labels: &[Intent], cuts: &[f64]) -> f64 {
    let prior = entropy(&counts_of(labels));
    if cuts.is_empty() {
        return 0.0;
    }
    let mut bins = vec![[0usize; Intent::COUNT]; cuts.len() + 1];
    for (&x, &label) in values.iter().zip(labels) {
        let bin = cuts.partition_point(|&c| c < x);
        bins[bin][label.index()] += 1;
    }
    let n = values.len() as f64;
    let conditional: f64 = bins
        .iter()
        .map(|b| b.iter().sum::<usize>() as f64 / n * entropy(b))
        .sum();
    (prior - conditional).clamp(0.0, prior)
}

/// Information gain in bits of one feature column.
pub fn information_gain_of(values: &[f64], labels: &[Intent], method: Discretization) -> f64 {
    let cuts = match method {
        Discretization::Mdl => mdl_cut_points(values, labels),
        Discretization::EqualFrequency(bins) => equal_frequency_cut_points(values, bins),
    };
    gain_for_cuts(values, labels, &cuts)
}

/// Information gain of feature `feature` (index into `FEATURE_NAMES`) with MDL bins.
pub fn information_gain(data: &LabeledDataset, feature: usize) -> f64 {
    information_gain_of(&data.column(feature), &data.labels(), Discretization::Mdl)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRank {
    pub feature: String,
    pub information_gain: f64,
}

pub fn rank_features(data: &LabeledDataset) -> Vec<FeatureRank> {
    rank_features_with(data, Discretization::Mdl)
}

/// All features by descending gain; equal gains keep the feature order.
pub fn rank_features_with(data: &LabeledDataset, method: Discretization) -> Vec<FeatureRank> {
    let labels = data.labels();
    let matrix = data.matrix();
    let gains: Vec<f64> = (0..FEATURE_COUNT)
        .into_par_iter()
        .map(|f| {
            let column: Vec<f64> = matrix.iter().map(|row| row[f]).collect();
            information_gain_of(&column, &labels, method)
        })
        .collect();
    let mut order: Vec<usize> = (0..FEATURE_COUNT).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .map(|f| FeatureRank {
            feature: FEATURE_NAMES[f].to_string(),
            information_gain: gains[f],
        })
        .collect()
}

/// Two-column CSV (`feature,information_gain`) in rank order.
pub fn write_ranking_csv<W: std::io::Write>(mut out: W, ranking: &[FeatureRank]) -> std::io::Result<()> {
    writeln!(out, "feature,information_gain")?;
    for r in ranking {
        writeln!(out, "{},{}", r.feature, r.information_gain)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Intent::*;

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&[5, 5]), 1.0);
        assert_eq!(entropy(&[7, 0, 0]), 0.0);
        assert_eq!(entropy(&[]), 0.0);
        assert!((entropy(&[454, 275, 184]) - 1.488_367_5).abs() < 1e-6);
    }

    #[test]
    fn perfect_binary_feature_gives_one_bit() {
        let values: Vec<f64> = (0..100).map(|i| if i < 50 { 0.0 } else { 1.0 }).collect();
        let labels: Vec<Intent> = (0..100)
            .map(|i| if i < 50 { Informational } else { Navigational })
            .collect();
        assert_eq!(mdl_cut_points(&values, &labels), [0.5]);
        let ig = information_gain_of(&values, &labels, Discretization::Mdl);
        assert!((ig - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_feature_gives_zero() {
        let labels = [Informational, Navigational, Transactional, Navigational];
        assert_eq!(information_gain_of(&[3.0; 4], &labels, Discretization::Mdl), 0.0);
        assert_eq!(
            information_gain_of(&[3.0; 4], &labels, Discretization::EqualFrequency(10)),
            0.0
        );
    }

    #[test]
    fn class_index_feature_recovers_class_entropy() {
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (class, count) in [(Informational, 454), (Navigational, 275), (Transactional, 184)] {
            for _ in 0..count {
                values.push(class.index() as f64);
                labels.push(class);
            }
        }
        let ig = information_gain_of(&values, &labels, Discretization::Mdl);
        assert!((ig - entropy(&[454, 275, 184])).abs() < 1e-12);
        assert_eq!(mdl_cut_points(&values, &labels), [0.5, 1.5]);
    }

    #[test]
    fn tiny_noisy_sample_rejects_cut() {
        // four points, one boundary that barely helps
        let values = [1.0, 2.0, 3.0, 4.0];
        let labels = [Informational, Navigational, Informational, Navigational];
        assert!(mdl_cut_points(&values, &labels).is_empty());
    }

    #[test]
    fn equal_frequency_cuts() {
        let values: Vec<f64> = (0..20).map(f64::from).collect();
        let cuts = equal_frequency_cut_points(&values, 10);
        assert_eq!(cuts.len(), 9);
        assert_eq!(cuts[0], 1.5);
        let ties = [1.0, 1.0, 1.0, 1.0, 2.0];
        assert_eq!(equal_frequency_cut_points(&ties, 5), [1.5]);
    }

    proptest! {
        #[test]
        fn gain_is_bounded_by_class_entropy(
            rows in prop::collection::vec((0.0f64..5.0, 0usize..3), 1..60),
            bins in 2usize..12,
        ) {
            let values: Vec<f64> = rows.iter().map(|r| r.0.round()).collect();
            let labels: Vec<Intent> = rows.iter().map(|r| Intent::from_index(r.1).unwrap()).collect();
            let h = entropy(&counts_of(&labels));
            for method in [Discretization::Mdl, Discretization::EqualFrequency(bins)] {
                let ig = information_gain_of(&values, &labels, method);
                prop_assert!(ig >= 0.0 && ig <= h + 1e-12);
            }
        }
    }
}
