//! Joins the clinical table with extracted features and runs every
//! configured pipeline × learner × validation scheme.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use lungtex_core::evaluation::{
    kfold_plan, loco_plan, pipeline_columns, run_experiment, selection_rates, stratified_kfold_plan,
    write_summary_csv, EvaluationReport, ExperimentConfig, FoldPlan, MeanStd, Pipeline,
};
use lungtex_core::tabular::{ColumnOrigin, FeatureMatrix, FeatureTable, LearnerKind};
use lungtex_core::Error;

use crate::config::{pipeline_key, CvSpec, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::DatasetManifest;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const REPORTS_DIR: &str = "reports";

/// Rows of `clinical` reordered to the manifest, with the manifest's ids
/// and centres, plus the image features when a table is given.
pub fn assemble(
    manifest: &DatasetManifest,
    clinical: &FeatureMatrix,
    features: Option<&FeatureTable>,
) -> CliResult<FeatureMatrix> {
    let index: HashMap<&str, usize> = clinical.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    if index.len() != clinical.ids.len() {
        return Err(CliError::data("clinical table has duplicate patient ids"));
    }
    let known: HashSet<&str> = index.keys().copied().collect();
    manifest.check_clinical_keys(&known)?;

    let rows: Vec<usize> = manifest.entries.iter().map(|e| index[e.clinical_key.as_str()]).collect();
    let mut m = clinical.select_rows(&rows);
    for (r, e) in manifest.entries.iter().enumerate() {
        if !m.centres[r].is_empty() && m.centres[r] != e.centre {
            log::warn!(
                "{}: clinical centre '{}' differs from manifest centre '{}'; using the manifest",
                e.id,
                m.centres[r],
                e.centre
            );
        }
        m.centres[r] = e.centre.clone();
    }
    m.ids = manifest.ids();
    match features {
        Some(t) => Ok(m.with_image_features(t, &m.ids.clone())?),
        None => Ok(m),
    }
}

pub fn build_plan(data: &FeatureMatrix, cv: CvSpec, stratified: bool, seed: u64) -> CliResult<FoldPlan> {
    let plan = match cv {
        CvSpec::Kfold { k, repetitions } if stratified => stratified_kfold_plan(&data.labels, k, repetitions, seed)?,
        CvSpec::Kfold { k, repetitions } => kfold_plan(data.n_rows, k, repetitions, seed)?,
        CvSpec::Loco => loco_plan(&data.centres)?,
    };
    plan.validate()?;
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub pipeline: Pipeline,
    pub learner: LearnerKind,
    pub cv: CvSpec,
    pub d_pr: Option<usize>,
    pub file: String,
    pub accuracy: Option<MeanStd>,
    pub best: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    /// Best run of each pipeline × learner × scheme, in config order.
    pub best: Vec<EvaluationReport>,
    pub runs: Vec<RunRecord>,
    pub reports: Vec<EvaluationReport>,
}

fn report_file(pipeline: Pipeline, learner: LearnerKind, cv: CvSpec, d_pr: Option<usize>) -> String {
    let d = d_pr.map_or("all".to_string(), |d| d.to_string());
    format!(
        "{}_{}_{}_dpr-{d}.json",
        pipeline_key(&pipeline),
        learner.short_name().to_ascii_lowercase(),
        cv.tag()
    )
}

/// Runs every configured variant. Image pipelines run once per d_pr
/// candidate and keep the run with the highest mean accuracy, the smaller
/// d_pr winning ties.
pub fn run_all(data: &FeatureMatrix, config: &RunConfig, seed: u64) -> CliResult<ExperimentOutcome> {
    let mut out = ExperimentOutcome {
        best: Vec::new(),
        runs: Vec::new(),
        reports: Vec::new(),
    };
    for &cv in &config.cv {
        let plan = build_plan(data, cv, config.stratified, seed)?;
        for &pipeline in &config.pipelines {
            let cols = pipeline_columns(data, pipeline);
            let n_image = cols.columns_of(ColumnOrigin::Image).len();
            if pipeline.uses_images() && n_image == 0 {
                return Err(CliError::usage(format!(
                    "pipeline {} needs image features; pass --features",
                    pipeline_key(&pipeline)
                )));
            }
            for &learner in &config.learners {
                let mut best: Option<usize> = None;
                for d_pr in config.d_pr.candidates(n_image) {
                    let ec = ExperimentConfig {
                        pipeline,
                        learner,
                        d_pr,
                        mi_neighbors: config.mi_neighbors,
                        inner_folds: config.inner_folds,
                        seed,
                    };
                    let report = run_experiment(data, &ec, &plan)?;
                    let acc = report.aggregate.accuracy;
                    log::info!(
                        "{} {} {} d_pr={}: accuracy {} ({:.1}s)",
                        pipeline_key(&pipeline),
                        learner.short_name(),
                        cv,
                        d_pr.map_or("all".into(), |d| d.to_string()),
                        acc.map_or("n/a".into(), |a| format!("{:.4}", a.mean)),
                        report.runtime_secs
                    );
                    let score = |r: &RunRecord| r.accuracy.map_or(f64::NEG_INFINITY, |a| a.mean);
                    out.runs.push(RunRecord {
                        pipeline,
                        learner,
                        cv,
                        d_pr,
                        file: report_file(pipeline, learner, cv, d_pr),
                        accuracy: acc,
                        best: false,
                    });
                    out.reports.push(report);
                    let idx = out.runs.len() - 1;
                    if best.is_none_or(|b| score(&out.runs[idx]) > score(&out.runs[b])) {
                        best = Some(idx);
                    }
                }
                let b = best.expect("at least one d_pr candidate");
                out.runs[b].best = true;
                out.best.push(out.reports[b].clone());
            }
        }
    }
    Ok(out)
}

fn write_runs(runs: &[RunRecord], path: &Path) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["pipeline", "learner", "cv", "d_pr", "accuracy_mean", "accuracy_std", "best", "report"])?;
    for r in runs {
        w.write_record([
            pipeline_key(&r.pipeline).to_string(),
            r.learner.short_name().to_string(),
            r.cv.tag(),
            r.d_pr.map_or("all".into(), |d| d.to_string()),
            r.accuracy.map_or("n/a".into(), |a| format!("{:.6}", a.mean)),
            r.accuracy.map_or("n/a".into(), |a| format!("{:.6}", a.std)),
            r.best.to_string(),
            r.file.clone(),
        ])?;
    }
    w.flush().map_err(|e| CliError::Data(Error::io(path, e)))
}

/// Writes every report, the run index, the summary table of the best runs
/// and one selection-rate table per pipeline.
pub fn write_outputs(outcome: &ExperimentOutcome, out_dir: &Path) -> CliResult<()> {
    let reports_dir = out_dir.join(REPORTS_DIR);
    fs::create_dir_all(&reports_dir).map_err(|e| Error::io(&reports_dir, e))?;
    for (run, report) in outcome.runs.iter().zip(&outcome.reports) {
        let path = reports_dir.join(&run.file);
        fs::write(&path, report.to_json()?).map_err(|e| Error::io(&path, e))?;
    }
    write_runs(&outcome.runs, &out_dir.join(RUNS_FILE))?;
    write_summary_csv(&outcome.best, &out_dir.join(SUMMARY_FILE))?;

    let mut pipelines: Vec<Pipeline> = outcome.best.iter().map(|r| r.config.pipeline).collect();
    pipelines.sort();
    pipelines.dedup();
    for p in pipelines {
        let reports: Vec<EvaluationReport> =
            outcome.best.iter().filter(|r| r.config.pipeline == p).cloned().collect();
        let table = selection_rates(&reports)?;
        table.write_csv(&out_dir.join(format!("selection_rates_{}.csv", pipeline_key(&p))))?;
    }
    Ok(())
}

pub fn cmd_experiment(
    manifest: &DatasetManifest,
    clinical: &FeatureMatrix,
    features: Option<&FeatureTable>,
    config: &RunConfig,
    seed: u64,
    out_dir: &Path,
    jobs: usize,
) -> CliResult<ExperimentOutcome> {
    let needs_images = config.pipelines.iter().any(|p| p.uses_images());
    if needs_images && features.is_none() {
        return Err(CliError::usage("image pipelines need --features"));
    }
    let data = assemble(manifest, clinical, if needs_images { features } else { None })?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {jobs} workers: {e}")))?;
    let outcome = pool.install(|| run_all(&data, config, seed))?;
    write_outputs(&outcome, out_dir)?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::ManifestEntry;
    use lungtex_core::tabular::{parse_clinical_reader, ClinicalSchema};

    fn schema() -> ClinicalSchema {
        ClinicalSchema::parse("id|id|no|\nhosp|centre|no|\ny|label|no|\nage|continuous|yes|\n").unwrap()
    }

    fn manifest(keys: &[(&str, &str)]) -> DatasetManifest {
        DatasetManifest::new(
            keys.iter()
                .map(|(id, key)| ManifestEntry {
                    id: id.to_string(),
                    image: "x.pgm".into(),
                    mask: None,
                    centre: format!("C{}", id.len()),
                    clinical_key: key.to_string(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn assemble_follows_manifest_order() {
        let csv = "id,hosp,y,age\nk1,H,mild,50\nk2,H,severe,70\nk3,H,mild,40\n";
        let clin = parse_clinical_reader(csv.as_bytes(), &schema()).unwrap();
        let m = manifest(&[("p3", "k3"), ("p1", "k1")]);
        let mut t = FeatureTable::new(vec!["f".into()]);
        t.push("p1".into(), &[1.5]).unwrap();
        t.push("p3".into(), &[3.5]).unwrap();
        let data = assemble(&m, &clin, Some(&t)).unwrap();
        assert_eq!(data.ids, vec!["p3", "p1"]);
        assert_eq!(data.data, vec![40.0, 3.5, 50.0, 1.5]);
        assert_eq!(data.centres, vec!["C2", "C2"]);
    }

    #[test]
    fn mismatched_ids_are_listed() {
        let csv = "id,hosp,y,age\nk1,H,mild,50\n";
        let clin = parse_clinical_reader(csv.as_bytes(), &schema()).unwrap();
        let err = assemble(&manifest(&[("p1", "k1"), ("p2", "kx"), ("p3", "ky")]), &clin, None).unwrap_err();
        assert!(err.to_string().contains("kx, ky"), "{err}");
        assert_eq!(err.exit_code(), 2);

        let t = FeatureTable::new(vec!["f".into()]);
        let err = assemble(&manifest(&[("p1", "k1")]), &clin, Some(&t)).unwrap_err();
        assert!(err.to_string().contains("p1"), "{err}");
    }

    #[test]
    fn report_names_are_distinct() {
        let a = report_file(Pipeline::Fused, LearnerKind::RandomForest, CvSpec::Loco, Some(4));
        let b = report_file(Pipeline::Fused, LearnerKind::RandomForest, CvSpec::Loco, None);
        assert_eq!(a, "fused_rf_loco_dpr-4.json");
        assert_ne!(a, b);
    }
}
