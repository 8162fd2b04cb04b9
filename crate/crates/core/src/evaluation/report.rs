//! Summary tables built from evaluation reports.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::{EvaluationReport, MeanStd};
use crate::tabular::LearnerKind;
use crate::{Error, Result};

fn cell(m: Option<MeanStd>) -> String {
    match m {
        Some(m) => format!("{:.4} ± {:.4}", m.mean, m.std),
        None => "n/a".into(),
    }
}

/// One row per report: approach and mean ± std metrics, plus the
/// validation scheme and number of pre-selected image descriptors.
pub fn write_summary_csv(reports: &[EvaluationReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format("csv", e.to_string()))?;
    w.write_record(["approach", "accuracy", "sensitivity", "specificity", "learner", "scheme", "d_pr"])?;
    for r in reports {
        let d_pr = if r.n_image_columns == 0 {
            "-".to_string()
        } else {
            match r.config.d_pr {
                Some(d) if d < r.n_image_columns => d.to_string(),
                _ => format!("all ({})", r.n_image_columns),
            }
        };
        w.write_record([
            r.config.pipeline.approach().to_string(),
            cell(r.aggregate.accuracy),
            cell(r.aggregate.sensitivity),
            cell(r.aggregate.specificity),
            r.config.learner.short_name().to_string(),
            r.scheme.label(),
            d_pr,
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRateRow {
    pub feature: String,
    /// Rate per learner, absent when that learner has no completed folds.
    pub per_learner: BTreeMap<LearnerKind, f64>,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRateTable {
    pub learners: Vec<LearnerKind>,
    /// Completed folds per learner, the denominators of the rates.
    pub opportunities: BTreeMap<LearnerKind, usize>,
    /// Sorted by decreasing cumulative rate, then name.
    pub rows: Vec<SelectionRateRow>,
}

/// Fraction of completed folds in which each feature survived RFECV, per
/// learner and over all reports together.
pub fn selection_rates(reports: &[EvaluationReport]) -> Result<SelectionRateTable> {
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut opportunities: BTreeMap<LearnerKind, usize> = BTreeMap::new();
    let mut counts: BTreeMap<String, BTreeMap<LearnerKind, usize>> = BTreeMap::new();
    let mut features: BTreeSet<String> = BTreeSet::new();
    for r in reports {
        let learner = r.config.learner;
        for f in r.folds.iter().filter(|f| f.metrics.is_some()) {
            *opportunities.entry(learner).or_default() += 1;
            for name in &f.selected {
                features.insert(name.clone());
                *counts.entry(name.clone()).or_default().entry(learner).or_default() += 1;
            }
        }
    }
    let total: usize = opportunities.values().sum();
    let learners: Vec<LearnerKind> = opportunities.keys().copied().collect();
    let mut rows: Vec<SelectionRateRow> = features
        .into_iter()
        .map(|feature| {
            let c = counts.get(&feature).cloned().unwrap_or_default();
            let per_learner = learners
                .iter()
                .map(|l| (*l, *c.get(l).unwrap_or(&0) as f64 / opportunities[l] as f64))
                .collect();
            let cumulative = c.values().sum::<usize>() as f64 / total.max(1) as f64;
            SelectionRateRow {
                feature,
                per_learner,
                cumulative,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.cumulative.total_cmp(&a.cumulative).then_with(|| a.feature.cmp(&b.feature)));
    Ok(SelectionRateTable {
        learners,
        opportunities,
        rows,
    })
}

impl SelectionRateTable {
    pub fn rate(&self, feature: &str) -> f64 {
        self.rows
            .iter()
            .find(|r| r.feature == feature)
            .map_or(0.0, |r| r.cumulative)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::format("csv", e.to_string()))?;
        let mut header = vec!["feature".to_string()];
        header.extend(self.learners.iter().map(|l| l.short_name().to_string()));
        header.push("cumulative".into());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.feature.clone()];
            rec.extend(self.learners.iter().map(|l| format!("{:.4}", r.per_learner[l])));
            rec.push(format!("{:.4}", r.cumulative));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}
