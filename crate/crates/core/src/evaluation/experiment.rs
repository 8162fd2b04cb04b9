//! One evaluation run: a learner and pipeline over every fold of a plan.
//!
//! Each fold sees its test rows only when predicting. Missing-value means,
//! scaling statistics, the MI ranking and the RFECV subset all come from
//! the train rows.

use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{classification_metrics, Metrics};
use super::plan::{Fold, FoldPlan, Scheme};
use crate::rng::derive_seed;
use crate::tabular::{
    fit, impute_mean, mi_filter, rfecv, ColumnOrigin, FeatureMatrix, LearnerKind, DEFAULT_INNER_FOLDS,
    DEFAULT_NEIGHBORS,
};
use crate::{Error, Result};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    ClinicalOnly,
    ImagesOnly,
    Fused,
}

impl Pipeline {
    pub fn approach(self) -> &'static str {
        match self {
            Pipeline::ClinicalOnly => "Clinical data",
            Pipeline::ImagesOnly => "CXR images",
            Pipeline::Fused => "Clinical data and CXR images",
        }
    }

    pub fn uses_images(self) -> bool {
        self != Pipeline::ClinicalOnly
    }

    pub fn uses_clinical(self) -> bool {
        self != Pipeline::ImagesOnly
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clinical_only" | "clinical" => Ok(Self::ClinicalOnly),
            "images_only" | "images" | "image" => Ok(Self::ImagesOnly),
            "fused" | "both" => Ok(Self::Fused),
            other => Err(Error::invalid(format!("unknown pipeline '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    pub learner: LearnerKind,
    /// Image descriptors kept by the MI filter; `None` keeps all of them.
    pub d_pr: Option<usize>,
    pub mi_neighbors: usize,
    pub inner_folds: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(pipeline: Pipeline, learner: LearnerKind, seed: u64) -> Self {
        Self {
            pipeline,
            learner,
            d_pr: None,
            mi_neighbors: DEFAULT_NEIGHBORS,
            inner_folds: DEFAULT_INNER_FOLDS,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub repetition: usize,
    pub fold: usize,
    pub centre: Option<String>,
    pub n_train: usize,
    pub n_test: usize,
    pub metrics: Option<Metrics>,
    pub selected: Vec<String>,
    pub n_clinical_selected: usize,
    pub n_image_selected: usize,
    /// Columns dropped because they were empty or constant in the train rows.
    pub dropped: Vec<String>,
    /// Why the fold produced no predictions.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation over folds.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let (mean, std) = crate::tabular::mean_std(values);
        Some(Self {
            mean,
            std,
            n: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy: Option<MeanStd>,
    pub sensitivity: Option<MeanStd>,
    pub specificity: Option<MeanStd>,
    pub n_folds: usize,
    pub n_skipped: usize,
    pub n_sensitivity_undefined: usize,
    pub n_specificity_undefined: usize,
}

impl Aggregate {
    pub fn from_folds(folds: &[FoldResult]) -> Self {
        let done: Vec<&Metrics> = folds.iter().filter_map(|f| f.metrics.as_ref()).collect();
        let acc: Vec<f64> = done.iter().map(|m| m.accuracy).collect();
        let sens: Vec<f64> = done.iter().filter_map(|m| m.sensitivity).collect();
        let spec: Vec<f64> = done.iter().filter_map(|m| m.specificity).collect();
        Self {
            accuracy: MeanStd::of(&acc),
            sensitivity: MeanStd::of(&sens),
            specificity: MeanStd::of(&spec),
            n_folds: folds.len(),
            n_skipped: folds.len() - done.len(),
            n_sensitivity_undefined: done.len() - sens.len(),
            n_specificity_undefined: done.len() - spec.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format_version: u32,
    pub config: ExperimentConfig,
    pub scheme: Scheme,
    pub n_rows: usize,
    pub n_clinical_columns: usize,
    pub n_image_columns: usize,
    pub folds: Vec<FoldResult>,
    pub aggregate: Aggregate,
    /// Wall-clock seconds; not serialized so reports stay reproducible.
    #[serde(skip)]
    pub runtime_secs: f64,
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if r.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::format("report", format!("format version {}", r.format_version)));
        }
        Ok(r)
    }
}

fn skip(fold: &Fold, reason: String) -> FoldResult {
    log::warn!("fold {}/{} skipped: {reason}", fold.repetition, fold.index);
    FoldResult {
        repetition: fold.repetition,
        fold: fold.index,
        centre: fold.centre.clone(),
        n_train: fold.train.len(),
        n_test: fold.test.len(),
        metrics: None,
        selected: Vec::new(),
        n_clinical_selected: 0,
        n_image_selected: 0,
        dropped: Vec::new(),
        skipped: Some(reason),
    }
}

fn run_fold(data: &FeatureMatrix, config: &ExperimentConfig, fold: &Fold) -> Result<FoldResult> {
    let train_labels: Vec<u8> = fold.train.iter().map(|&r| data.labels[r]).collect();
    let pos = train_labels.iter().filter(|&&l| l != 0).count();
    if pos == 0 || pos == train_labels.len() {
        return Ok(skip(fold, "training rows hold a single class".into()));
    }
    if pos < config.inner_folds || train_labels.len() - pos < config.inner_folds {
        return Ok(skip(fold, format!("fewer than {} training rows in a class", config.inner_folds)));
    }
    let seed = derive_seed(config.seed, &[fold.repetition as u64, fold.index as u64]);

    // columns with no observed train value cannot be imputed
    let mut dropped = Vec::new();
    let observed: Vec<usize> = (0..data.n_cols())
        .filter(|&c| {
            let ok = fold.train.iter().any(|&r| !data.is_missing(r, c));
            if !ok {
                dropped.push(data.names[c].clone());
            }
            ok
        })
        .collect();
    let m = impute_mean(&data.select_columns(&observed), &fold.train)?;
    let (m, scaling) = crate::tabular::standardize_columns(&m, &fold.train)?;
    dropped.extend(scaling.dropped);

    let train = m.select_rows(&fold.train);
    let image_cols = train.columns_of(ColumnOrigin::Image);
    let mut keep = train.columns_of(ColumnOrigin::Clinical);
    if !image_cols.is_empty() {
        let d_pr = config.d_pr.unwrap_or(image_cols.len()).min(image_cols.len());
        let chosen = if d_pr == image_cols.len() {
            image_cols
        } else {
            let names = mi_filter(&train, &image_cols, d_pr, config.mi_neighbors, derive_seed(seed, &[1]))?;
            names.iter().map(|n| train.column_index(n).expect("filtered from train")).collect()
        };
        keep.extend(chosen);
    }
    keep.sort_unstable();
    if keep.is_empty() {
        return Ok(skip(fold, "no usable feature columns".into()));
    }
    let train = train.select_columns(&keep);
    let selection = rfecv(&train, config.learner, config.inner_folds, derive_seed(seed, &[2]))?;
    let train = train.select_names(&selection.selected)?;
    let model = fit(config.learner, &train.names, &train.data, &train.labels, derive_seed(seed, &[3]))?;

    let test = m.select_rows(&fold.test).select_names(&selection.selected)?;
    let pred = model.predict(&test.data)?;
    let metrics = classification_metrics(&pred, &test.labels)?;
    let n_image = train.origin.iter().filter(|&&o| o == ColumnOrigin::Image).count();
    Ok(FoldResult {
        repetition: fold.repetition,
        fold: fold.index,
        centre: fold.centre.clone(),
        n_train: fold.train.len(),
        n_test: fold.test.len(),
        metrics: Some(metrics),
        n_clinical_selected: selection.selected.len() - n_image,
        n_image_selected: n_image,
        selected: selection.selected,
        dropped,
        skipped: None,
    })
}

/// Columns offered to the learner under `pipeline`: eligible clinical
/// columns, image columns, or both.
pub fn pipeline_columns(data: &FeatureMatrix, pipeline: Pipeline) -> FeatureMatrix {
    let cols: Vec<usize> = (0..data.n_cols())
        .filter(|&c| data.eligible[c])
        .filter(|&c| match data.origin[c] {
            ColumnOrigin::Clinical => pipeline.uses_clinical(),
            ColumnOrigin::Image => pipeline.uses_images(),
        })
        .collect();
    data.select_columns(&cols)
}

/// Runs every fold of `plan`, in parallel, and returns results ordered by
/// (repetition, fold).
pub fn run_experiment(data: &FeatureMatrix, config: &ExperimentConfig, plan: &FoldPlan) -> Result<EvaluationReport> {
    if plan.n_rows != data.n_rows {
        return Err(Error::DimensionMismatch {
            expected: (data.n_rows, 1),
            found: (plan.n_rows, 1),
        });
    }
    if config.d_pr == Some(0) {
        return Err(Error::invalid("d_pr must be >= 1"));
    }
    let start = Instant::now();
    let m = pipeline_columns(data, config.pipeline);
    if m.n_cols() == 0 {
        return Err(Error::invalid(format!(
            "no eligible columns for the {:?} pipeline",
            config.pipeline
        )));
    }
    let mut folds = plan
        .folds
        .par_iter()
        .map(|f| run_fold(&m, config, f))
        .collect::<Result<Vec<_>>>()?;
    folds.sort_by_key(|f| (f.repetition, f.fold));
    Ok(EvaluationReport {
        format_version: REPORT_FORMAT_VERSION,
        config: config.clone(),
        scheme: plan.scheme.clone(),
        n_rows: data.n_rows,
        n_clinical_columns: m.columns_of(ColumnOrigin::Clinical).len(),
        n_image_columns: m.columns_of(ColumnOrigin::Image).len(),
        aggregate: Aggregate::from_folds(&folds),
        folds,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::plan::kfold_plan;
    use super::*;
    use crate::rng::{seeded, standard_normal};

    fn cohort(n: usize, signal: f64, seed: u64) -> FeatureMatrix {
        let mut rng = seeded(seed, &[0]);
        let d = 4;
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let mut data = Vec::new();
        for &l in &labels {
            for c in 0..d {
                let s = if c == 0 { signal * (2.0 * l as f64 - 1.0) } else { 0.0 };
                data.push(s + standard_normal(&mut rng));
            }
        }
        data[3] = f64::NAN;
        FeatureMatrix {
            names: vec!["a".into(), "b".into(), "img1".into(), "img2".into()],
            data,
            n_rows: n,
            labels,
            centres: (0..n).map(|i| format!("C{}", i % 3)).collect(),
            ids: (0..n).map(|i| i.to_string()).collect(),
            eligible: vec![true; d],
            origin: vec![ColumnOrigin::Clinical, ColumnOrigin::Clinical, ColumnOrigin::Image, ColumnOrigin::Image],
        }
    }

    #[test]
    fn strong_signal_is_learned() {
        let m = cohort(120, 2.0, 1);
        let plan = kfold_plan(m.n_rows, 5, 1, 3).unwrap();
        let cfg = ExperimentConfig {
            d_pr: Some(1),
            ..ExperimentConfig::new(Pipeline::Fused, LearnerKind::LogisticRegression, 4)
        };
        let r = run_experiment(&m, &cfg, &plan).unwrap();
        assert_eq!(r.folds.len(), 5);
        let acc = r.aggregate.accuracy.unwrap();
        assert!(acc.mean > 0.85, "{}", acc.mean);
        let mean: f64 = r.folds.iter().map(|f| f.metrics.unwrap().accuracy).sum::<f64>() / 5.0;
        assert!((mean - acc.mean).abs() < 1e-12);
        assert!(r.folds.iter().all(|f| f.selected.contains(&"a".to_string())));
        assert!(r.folds.iter().all(|f| f.n_image_selected <= 1));
    }

    #[test]
    fn single_class_training_fold_is_skipped() {
        let mut m = cohort(20, 1.0, 2);
        // every severe row in one place, so a 2-fold split may isolate them
        m.labels = (0..20).map(|i| u8::from(i == 0)).collect();
        let plan = FoldPlan {
            scheme: Scheme::Loco,
            n_rows: 20,
            folds: vec![Fold {
                repetition: 0,
                index: 0,
                train: (1..20).collect(),
                test: vec![0],
                centre: None,
            }],
        };
        let r = run_experiment(&m, &ExperimentConfig::new(Pipeline::ClinicalOnly, LearnerKind::LinearSvm, 0), &plan)
            .unwrap();
        assert!(r.folds[0].skipped.is_some());
        assert_eq!(r.aggregate.n_skipped, 1);
        assert!(r.aggregate.accuracy.is_none());
    }

    #[test]
    fn report_json_round_trip() {
        let m = cohort(60, 1.0, 5);
        let plan = kfold_plan(m.n_rows, 3, 1, 0).unwrap();
        let r = run_experiment(&m, &ExperimentConfig::new(Pipeline::ClinicalOnly, LearnerKind::LinearSvm, 1), &plan)
            .unwrap();
        let back = EvaluationReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back.folds, r.folds);
        assert!(!r.to_json().unwrap().contains("runtime"));
    }
}
