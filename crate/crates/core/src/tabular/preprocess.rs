//! Train-fold imputation and scaling. Statistics come from `train_rows`
//! only and are then applied to every row.

use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use crate::{Error, Result};

/// Column means over the observed train cells.
pub fn train_means(m: &FeatureMatrix, train_rows: &[usize]) -> Result<Vec<f64>> {
    (0..m.n_cols())
        .map(|c| {
            let (mut sum, mut n) = (0.0, 0usize);
            for &r in train_rows {
                let v = m.value(r, c);
                if !v.is_nan() {
                    sum += v;
                    n += 1;
                }
            }
            if n == 0 {
                Err(Error::FullyMissing(m.names[c].clone()))
            } else {
                Ok(sum / n as f64)
            }
        })
        .collect()
}

/// Replaces missing cells, in train and test rows alike, by the train-row
/// column mean. Observed cells are left untouched.
pub fn impute_mean(m: &FeatureMatrix, train_rows: &[usize]) -> Result<FeatureMatrix> {
    let means = train_means(m, train_rows)?;
    let d = m.n_cols();
    let mut out = m.clone();
    for (i, v) in out.data.iter_mut().enumerate() {
        if v.is_nan() {
            *v = means[i % d];
        }
    }
    Ok(out)
}

/// Per-column train statistics kept by [`standardize_columns`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Columns removed because their train values were constant.
    pub dropped: Vec<String>,
}

/// Population mean and standard deviation of a slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// z-scores with train mean and (population) std. Columns whose train std
/// is zero are dropped with a warning.
pub fn standardize_columns(m: &FeatureMatrix, train_rows: &[usize]) -> Result<(FeatureMatrix, ColumnScaling)> {
    if train_rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut keep = Vec::new();
    let mut scaling = ColumnScaling {
        names: Vec::new(),
        means: Vec::new(),
        stds: Vec::new(),
        dropped: Vec::new(),
    };
    for c in 0..m.n_cols() {
        let vals: Vec<f64> = train_rows.iter().map(|&r| m.value(r, c)).collect();
        if vals.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid(format!("column '{}' still has missing values", m.names[c])));
        }
        let (mean, std) = mean_std(&vals);
        // relative threshold so that a column of identical large values
        // with rounding noise is still caught
        if !(std > 1e-12 * mean.abs().max(1.0)) {
            log::warn!("dropping column '{}': zero variance in training rows", m.names[c]);
            scaling.dropped.push(m.names[c].clone());
            continue;
        }
        keep.push(c);
        scaling.names.push(m.names[c].clone());
        scaling.means.push(mean);
        scaling.stds.push(std);
    }
    let mut out = m.select_columns(&keep);
    let d = keep.len();
    for (i, v) in out.data.iter_mut().enumerate() {
        let c = i % d;
        *v = (*v - scaling.means[c]) / scaling.stds[c];
    }
    Ok((out, scaling))
}
