use serde::{Deserialize, Serialize};

use crate::eval::infogain::FeatureRank;
use crate::eval::metrics::{metrics_from_matrix, ConfusionMatrix, Metrics};
use crate::eval::EvalError;
use crate::features::Granularity;
use crate::learn::{Algorithm, Hyperparams};
use crate::logmodel::Intent;

/// The pipeline settings a report was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub balanced: bool,
    pub granularity: Granularity,
    pub seed: u64,
    pub folds: usize,
    pub inner_folds: usize,
    pub grid: Vec<Hyperparams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold: usize,
    /// Class counts of the held-out rows.
    pub test_counts: [usize; Intent::COUNT],
    /// Class counts of the training rows before balancing.
    pub train_counts: [usize; Intent::COUNT],
    /// Class counts the model was actually fitted on.
    pub fitted_counts: [usize; Intent::COUNT],
    pub selected: Hyperparams,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub unit_id: String,
    pub fold: usize,
    pub truth: Intent,
    pub predicted: Intent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: RunConfig,
    pub units: usize,
    pub class_counts: [usize; Intent::COUNT],
    /// Pooled over all folds.
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub folds: Vec<FoldSummary>,
    /// In dataset row order.
    pub predictions: Vec<Prediction>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub information_gain: Option<Vec<FeatureRank>>,
}

/// Column names of [`EvalReport::csv_row`].
pub const CSV_COLUMNS: [&str; 19] = [
    "algorithm",
    "balanced",
    "granularity",
    "seed",
    "folds",
    "nav_p",
    "nav_r",
    "nav_f1",
    "inf_p",
    "inf_r",
    "inf_f1",
    "trans_p",
    "trans_r",
    "trans_f1",
    "weighted_p",
    "weighted_r",
    "weighted_f1",
    "accuracy",
    "units",
];

impl EvalReport {
    /// Builds the report from per-row predictions.
    pub fn from_predictions(
        config: RunConfig,
        folds: Vec<FoldSummary>,
        predictions: Vec<Prediction>,
    ) -> Result<EvalReport, EvalError> {
        let confusion = ConfusionMatrix::from_pairs(predictions.iter().map(|p| (p.truth, p.predicted)));
        let metrics = metrics_from_matrix(&confusion)?;
        let counts = confusion.true_counts().map(|c| c as usize);
        Ok(EvalReport {
            config,
            units: predictions.len(),
            class_counts: counts,
            confusion,
            metrics,
            folds,
            predictions,
            information_gain: None,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<EvalReport, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Flat values matching [`CSV_COLUMNS`].
    pub fn csv_row(&self) -> Vec<String> {
        let m = &self.metrics;
        let mut row = vec![
            self.config.algorithm.to_string(),
            self.config.balanced.to_string(),
            self.config.granularity.as_str().to_string(),
            self.config.seed.to_string(),
            self.config.folds.to_string(),
        ];
        for class in [Intent::Navigational, Intent::Informational, Intent::Transactional] {
            let c = m.per_class.get(class);
            row.extend([c.precision, c.recall, c.f1].map(fmt3));
        }
        row.extend([m.weighted.precision, m.weighted.recall, m.weighted.f1, m.accuracy].map(fmt3));
        row.push(self.units.to_string());
        row
    }
}

fn fmt3(x: f64) -> String {
    format!("{x:.3}")
}

/// Writes a header plus one row per report.
pub fn write_reports_csv<W: std::io::Write>(out: W, reports: &[EvalReport]) -> csv::Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    writer.write_record(CSV_COLUMNS)?;
    for r in reports {
        writer.write_record(r.csv_row())?;
    }
    writer.flush()?;
    Ok(())
}

/// Fixed-width text table with the same columns as the CSV, one line per
/// report, grouped by training regime.
pub fn summary_table(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<11}{:<6}| {:^17} | {:^17} | {:^17} | {:^17} | {:>5}\n",
        "regime", "algo", "Navigational", "Informational", "Transactional", "Weighted", "Accu"
    ));
    out.push_str(&format!(
        "{:<17}| {s} | {s} | {s} | {s} |\n",
        "",
        s = format!("{:>5} {:>5} {:>5}", "P", "R", "F1")
    ));
    for r in reports {
        let m = &r.metrics;
        let cell = |c: crate::eval::ClassMetrics| format!("{:.3} {:.3} {:.3}", c.precision, c.recall, c.f1);
        out.push_str(&format!(
            "{:<11}{:<6}| {} | {} | {} | {} | {:.3}\n",
            if r.config.balanced {
                "balanced"
            } else {
                "unbalanced"
            },
            r.config.algorithm.short_name(),
            cell(m.per_class.navigational),
            cell(m.per_class.informational),
            cell(m.per_class.transactional),
            cell(m.weighted),
            m.accuracy
        ));
    }
    out
}
