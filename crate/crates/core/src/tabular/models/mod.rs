//! The three learners and their shared model type.

mod forest;
mod linear;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use forest::{Forest, Tree, TreeNode, N_TREES};
pub use linear::LinearModel;

use crate::{Error, Result};

/// Bumped whenever the serialized layout of [`Model`] changes.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    LogisticRegression,
    LinearSvm,
    RandomForest,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 3] = [Self::LogisticRegression, Self::LinearSvm, Self::RandomForest];

    pub fn short_name(self) -> &'static str {
        match self {
            Self::LogisticRegression => "LGR",
            Self::LinearSvm => "SVM",
            Self::RandomForest => "RF",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lgr" | "lr" | "logistic" | "logistic_regression" => Ok(Self::LogisticRegression),
            "svm" | "linear_svm" => Ok(Self::LinearSvm),
            "rf" | "random_forest" => Ok(Self::RandomForest),
            other => Err(Error::invalid(format!("unknown learner '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    Linear(LinearModel),
    Forest(Forest),
}

/// A fitted classifier bound to the feature names it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format_version: u32,
    pub kind: LearnerKind,
    pub feature_names: Vec<String>,
    pub params: ModelParams,
}

fn check_design(n_cols: usize, x: &[f64]) -> Result<usize> {
    if n_cols == 0 {
        return Err(Error::invalid("no features"));
    }
    if x.len() % n_cols != 0 {
        return Err(Error::invalid(format!(
            "{} values do not split into rows of {n_cols}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("design matrix holds non-finite values"));
    }
    Ok(x.len() / n_cols)
}

/// Fits `kind` on the row-major design `x` (one row per label).
pub fn fit(kind: LearnerKind, feature_names: &[String], x: &[f64], labels: &[u8], seed: u64) -> Result<Model> {
    let d = feature_names.len();
    let n = check_design(d, x)?;
    if n != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: (labels.len(), d),
            found: (n, d),
        });
    }
    let pos = labels.iter().filter(|&&l| l != 0).count();
    if pos == 0 || pos == n {
        return Err(Error::SingleClass);
    }
    let params = match kind {
        LearnerKind::LogisticRegression => ModelParams::Linear(linear::fit_logistic(x, d, labels)),
        LearnerKind::LinearSvm => ModelParams::Linear(linear::fit_svm(x, d, labels, seed)),
        LearnerKind::RandomForest => ModelParams::Forest(forest::fit_forest(x, d, labels, seed)),
    };
    Ok(Model {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        feature_names: feature_names.to_vec(),
        params,
    })
}

impl Model {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Class-1 (severe) labels for each row of `x`.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<u8>> {
        let d = self.n_features();
        check_design(d, x)?;
        Ok(x.chunks_exact(d)
            .map(|row| match &self.params {
                ModelParams::Linear(m) => (m.decision(row) > 0.0) as u8,
                ModelParams::Forest(f) => (f.probability(row) > 0.5) as u8,
            })
            .collect())
    }

    /// Non-negative importance per feature: |coefficient| for the linear
    /// models, mean impurity decrease for the forest.
    pub fn feature_importance(&self) -> Vec<f64> {
        match &self.params {
            ModelParams::Linear(m) => m.coefficients().iter().map(|c| c.abs()).collect(),
            ModelParams::Forest(f) => f.importance.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Model = serde_json::from_str(text)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::format(
                "model",
                format!("format version {} (expected {MODEL_FORMAT_VERSION})", m.format_version),
            ));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, standard_normal};
    use rand::Rng;

    fn blobs(n: usize, seed: u64) -> (Vec<f64>, Vec<u8>) {
        let mut rng = seeded(seed, &[0]);
        let mut x = Vec::with_capacity(2 * n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let l = (i % 2) as u8;
            let c = if l == 1 { 3.0 } else { -3.0 };
            x.push(c + 0.5 * standard_normal(&mut rng));
            x.push(0.7 * c + 0.5 * standard_normal(&mut rng));
            y.push(l);
        }
        (x, y)
    }

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn separable_blobs_fit_perfectly() {
        let (x, y) = blobs(200, 4);
        for kind in LearnerKind::ALL {
            let m = fit(kind, &names(2), &x, &y, 7).unwrap();
            assert_eq!(m.predict(&x).unwrap(), y, "{kind}");
            let imp = m.feature_importance();
            assert_eq!(imp.len(), 2);
            assert!(imp.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![1.0, 2.0, 3.0];
        for kind in LearnerKind::ALL {
            assert!(matches!(fit(kind, &names(1), &x, &[1, 1, 1], 0), Err(Error::SingleClass)));
        }
    }

    #[test]
    fn null_signal_is_chance() {
        let mut rng = seeded(5, &[0]);
        let n = 400;
        let x: Vec<f64> = (0..n * 3).map(|_| standard_normal(&mut rng)).collect();
        let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let half = n / 2;
        for kind in LearnerKind::ALL {
            let m = fit(kind, &names(3), &x[..half * 3], &y[..half], 1).unwrap();
            let p = m.predict(&x[half * 3..]).unwrap();
            let acc = p.iter().zip(&y[half..]).filter(|(a, b)| a == b).count() as f64 / half as f64;
            assert!((0.4..=0.6).contains(&acc), "{kind}: {acc}");
        }
    }

    #[test]
    fn deterministic_and_serializable() {
        let (x, y) = blobs(80, 2);
        for kind in LearnerKind::ALL {
            let a = fit(kind, &names(2), &x, &y, 11).unwrap();
            let b = fit(kind, &names(2), &x, &y, 11).unwrap();
            assert_eq!(a, b);
            let back = Model::from_json(&a.to_json().unwrap()).unwrap();
            assert_eq!(back, a);
        }
        let mut m = fit(LearnerKind::LinearSvm, &names(2), &x, &y, 0).unwrap();
        m.format_version = 99;
        assert!(Model::from_json(&serde_json::to_string(&m).unwrap()).is_err());
    }

    #[test]
    fn linear_models_follow_column_scaling() {
        let (x, y) = blobs(120, 8);
        let c = 7.5;
        let scaled: Vec<f64> = x.iter().enumerate().map(|(i, v)| if i % 2 == 1 { v * c } else { *v }).collect();
        for kind in [LearnerKind::LogisticRegression, LearnerKind::LinearSvm] {
            let a = fit(kind, &names(2), &x, &y, 3).unwrap();
            let b = fit(kind, &names(2), &scaled, &y, 3).unwrap();
            let (ModelParams::Linear(la), ModelParams::Linear(lb)) = (&a.params, &b.params) else {
                unreachable!()
            };
            let (ca, cb) = (la.coefficients(), lb.coefficients());
            assert!((cb[1] - ca[1] / c).abs() <= 1e-6 * ca[1].abs().max(1.0), "{kind}");
            assert!((cb[0] - ca[0]).abs() <= 1e-6 * ca[0].abs().max(1.0), "{kind}");
            for (r, row) in x.chunks_exact(2).enumerate() {
                let srow = &scaled[r * 2..r * 2 + 2];
                assert!((la.decision(row) - lb.decision(srow)).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn learner_names() {
        assert_eq!("rf".parse::<LearnerKind>().unwrap(), LearnerKind::RandomForest);
        assert_eq!("LGR".parse::<LearnerKind>().unwrap(), LearnerKind::LogisticRegression);
        assert!("knn".parse::<LearnerKind>().is_err());
    }
}
