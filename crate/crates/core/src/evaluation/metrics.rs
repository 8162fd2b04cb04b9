use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Severe (label 1) is the positive class. Sensitivity or specificity is
/// `None` when the truth lacks positives or negatives respectively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

pub fn classification_metrics(pred: &[u8], truth: &[u8]) -> Result<Metrics> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: (truth.len(), 1),
            found: (pred.len(), 1),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p != 0, t != 0) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
        }
    }
    let ratio = |a: usize, b: usize| (a + b > 0).then(|| a as f64 / (a + b) as f64);
    Ok(Metrics {
        accuracy: (tp + tn) as f64 / truth.len() as f64,
        sensitivity: ratio(tp, fn_),
        specificity: ratio(tn, fp),
        tp,
        tn,
        fp,
        fn_,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let m = classification_metrics(&[1, 0, 1, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!((m.accuracy, m.sensitivity, m.specificity), (1.0, Some(1.0), Some(1.0)));
        let m = classification_metrics(&[1, 0, 0, 0], &[1, 1, 0, 0]).unwrap();
        assert_eq!((m.accuracy, m.sensitivity, m.specificity), (0.75, Some(0.5), Some(1.0)));
        let m = classification_metrics(&[1, 0], &[1, 1]).unwrap();
        assert_eq!(m.specificity, None);
        assert!(classification_metrics(&[1], &[1, 0]).is_err());
    }
}
