//! Recursive feature elimination with cross-validated choice of the subset
//! size: one feature (the least important) leaves per step, the size with
//! the best mean inner-fold accuracy wins, smaller on ties, and a final
//! elimination on all rows picks the features.

use serde::{Deserialize, Serialize};

use super::matrix::{ColumnOrigin, FeatureMatrix};
use super::models::{fit, LearnerKind, Model};
use crate::evaluation::stratified_test_folds;
use crate::rng::derive_seed;
use crate::{Error, Result};

pub const DEFAULT_INNER_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected names in input column order.
    pub selected: Vec<String>,
    /// `mean_scores[s - 1]` is the mean inner accuracy with `s` features.
    pub mean_scores: Vec<f64>,
    /// Per inner fold, accuracy by subset size (same indexing).
    pub fold_scores: Vec<Vec<f64>>,
    /// Image columns offered to the wrapper.
    pub d_pr_used: usize,
}

fn gather(m: &FeatureMatrix, rows: &[usize], cols: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows.len() * cols.len());
    for &r in rows {
        let row = m.row(r);
        out.extend(cols.iter().map(|&c| row[c]));
    }
    out
}

/// Walks the elimination path on `rows`, calling `visit` with the current
/// column set and its fitted model, until `stop_at` columns remain.
fn eliminate<F>(
    m: &FeatureMatrix,
    rows: &[usize],
    kind: LearnerKind,
    seed: u64,
    stop_at: usize,
    mut visit: F,
) -> Result<Vec<usize>>
where
    F: FnMut(&[usize], &Model) -> Result<()>,
{
    let labels: Vec<u8> = rows.iter().map(|&r| m.labels[r]).collect();
    let mut cols: Vec<usize> = (0..m.n_cols()).collect();
    loop {
        let names: Vec<String> = cols.iter().map(|&c| m.names[c].clone()).collect();
        let x = gather(m, rows, &cols);
        let model = fit(kind, &names, &x, &labels, derive_seed(seed, &[cols.len() as u64]))?;
        visit(&cols, &model)?;
        if cols.len() <= stop_at {
            return Ok(cols);
        }
        let imp = model.feature_importance();
        // least important goes; on equal importance, the later name
        let worst = (0..cols.len())
            .min_by(|&a, &b| {
                imp[a]
                    .total_cmp(&imp[b])
                    .then_with(|| m.names[cols[b]].cmp(&m.names[cols[a]]))
            })
            .expect("non-empty");
        cols.remove(worst);
    }
}

fn accuracy(model: &Model, m: &FeatureMatrix, rows: &[usize], cols: &[usize]) -> Result<f64> {
    let pred = model.predict(&gather(m, rows, cols))?;
    let hits = pred.iter().zip(rows).filter(|(p, &r)| **p == m.labels[r]).count();
    Ok(hits as f64 / rows.len() as f64)
}

pub fn rfecv(m: &FeatureMatrix, kind: LearnerKind, inner_k: usize, seed: u64) -> Result<SelectionResult> {
    let d = m.n_cols();
    if d == 0 {
        return Err(Error::invalid("no features to select from"));
    }
    if inner_k < 2 {
        return Err(Error::invalid("inner folds must be >= 2"));
    }
    let pos = m.labels.iter().filter(|&&l| l != 0).count();
    let neg = m.n_rows - pos;
    if pos < inner_k || neg < inner_k {
        return Err(Error::invalid(format!(
            "degenerate folds: {inner_k} inner folds need that many rows per class (have {neg} mild, {pos} severe)"
        )));
    }
    let d_pr_used = m.origin.iter().filter(|&&o| o == ColumnOrigin::Image).count();

    let folds = stratified_test_folds(&m.labels, inner_k, derive_seed(seed, &[0x1f]))?;
    let mut fold_scores = Vec::with_capacity(inner_k);
    for (f, test) in folds.iter().enumerate() {
        let mut in_test = vec![false; m.n_rows];
        test.iter().for_each(|&r| in_test[r] = true);
        let train: Vec<usize> = (0..m.n_rows).filter(|&r| !in_test[r]).collect();
        let mut scores = vec![0.0; d];
        eliminate(m, &train, kind, derive_seed(seed, &[1, f as u64]), 1, |cols, model| {
            scores[cols.len() - 1] = accuracy(model, m, test, cols)?;
            Ok(())
        })?;
        fold_scores.push(scores);
    }
    let mean_scores: Vec<f64> = (0..d)
        .map(|s| fold_scores.iter().map(|f| f[s]).sum::<f64>() / inner_k as f64)
        .collect();
    let mut best = 0;
    for s in 1..d {
        if mean_scores[s] > mean_scores[best] {
            best = s;
        }
    }
    let all: Vec<usize> = (0..m.n_rows).collect();
    let mut cols = eliminate(m, &all, kind, derive_seed(seed, &[2]), best + 1, |_, _| Ok(()))?;
    cols.sort_unstable();
    Ok(SelectionResult {
        selected: cols.iter().map(|&c| m.names[c].clone()).collect(),
        mean_scores,
        fold_scores,
        d_pr_used,
    })
}
