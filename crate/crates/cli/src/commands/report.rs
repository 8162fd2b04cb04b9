//! Rebuilds summary tables from saved evaluation reports and compares
//! learners on their per-fold accuracies.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use lungtex_core::evaluation::{
    dunn_bonferroni, kruskal_wallis, mann_whitney_u, selection_rates, write_summary_csv, EvaluationReport,
    MwuMode, Pipeline,
};
use lungtex_core::tabular::LearnerKind;
use lungtex_core::{Error, Result};

use super::experiment::SUMMARY_FILE;
use crate::config::pipeline_key;
use crate::error::{CliError, CliResult};

pub const COMPARISONS_FILE: &str = "comparisons.csv";

/// Report JSON files directly inside `dir`, sorted by name.
pub fn report_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::usage(format!("cannot list {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::usage(format!("no report files in {}", dir.display())));
    }
    Ok(files)
}

pub fn load_reports(files: &[PathBuf]) -> Result<Vec<EvaluationReport>> {
    files
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            EvaluationReport::from_json(&text)
        })
        .collect()
}

type Variant = (String, Pipeline, LearnerKind);

/// Best report per (scheme, pipeline, learner): highest mean accuracy,
/// then the smaller d_pr, with "all" last.
pub fn best_reports(reports: &[EvaluationReport]) -> Vec<EvaluationReport> {
    let mut best: BTreeMap<Variant, &EvaluationReport> = BTreeMap::new();
    let score = |r: &EvaluationReport| r.aggregate.accuracy.map_or(f64::NEG_INFINITY, |a| a.mean);
    let size = |r: &EvaluationReport| r.config.d_pr.unwrap_or(usize::MAX);
    for r in reports {
        let key = (r.scheme.label(), r.config.pipeline, r.config.learner);
        let better = best.get(&key).is_none_or(|b| {
            score(r) > score(b) || (score(r) == score(b) && size(r) < size(b))
        });
        if better {
            best.insert(key, r);
        }
    }
    best.into_values().cloned().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub scheme: String,
    pub pipeline: Pipeline,
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
}

fn fold_accuracies(r: &EvaluationReport) -> Vec<f64> {
    r.folds.iter().filter_map(|f| f.metrics.as_ref().map(|m| m.accuracy)).collect()
}

/// Learners compared within each scheme and pipeline: Mann-Whitney U for
/// two learners, Kruskal-Wallis plus Bonferroni-adjusted Dunn pairs for
/// three or more.
pub fn compare_learners(best: &[EvaluationReport]) -> Result<Vec<Comparison>> {
    let mut groups: BTreeMap<(String, Pipeline), Vec<&EvaluationReport>> = BTreeMap::new();
    for r in best {
        groups.entry((r.scheme.label(), r.config.pipeline)).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((scheme, pipeline), reports) in groups {
        let accs: Vec<Vec<f64>> = reports.iter().map(|r| fold_accuracies(r)).collect();
        if reports.len() < 2 || accs.iter().any(|a| a.len() < 2) {
            continue;
        }
        let name = |i: usize| reports[i].config.learner.short_name();
        let mut push = |test: String, statistic: f64, p_value: f64| {
            out.push(Comparison {
                scheme: scheme.clone(),
                pipeline,
                test,
                statistic,
                p_value,
            })
        };
        if reports.len() == 2 {
            let t = mann_whitney_u(&accs[0], &accs[1], MwuMode::Auto)?;
            push(format!("Mann-Whitney U {} vs {}", name(0), name(1)), t.u, t.p);
            continue;
        }
        let kw = kruskal_wallis(&accs)?;
        let names: Vec<&str> = (0..reports.len()).map(name).collect();
        push(format!("Kruskal-Wallis {}", names.join("/")), kw.h, kw.p);
        for d in dunn_bonferroni(&accs)? {
            push(format!("Dunn {} vs {}", name(d.a), name(d.b)), d.z, d.p_adjusted);
        }
    }
    Ok(out)
}

fn write_comparisons(rows: &[Comparison], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format("csv", e.to_string()))?;
    w.write_record(["scheme", "approach", "test", "statistic", "p_value"])?;
    for c in rows {
        w.write_record([
            c.scheme.clone(),
            c.pipeline.approach().to_string(),
            c.test.clone(),
            format!("{:.4}", c.statistic),
            format!("{:.4e}", c.p_value),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `summary.csv`, per-pipeline selection rates and
/// `comparisons.csv` for the reports in `files`.
pub fn cmd_report(files: &[PathBuf], out_dir: &Path) -> CliResult<Vec<EvaluationReport>> {
    let reports = load_reports(files)?;
    let best = best_reports(&reports);
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_summary_csv(&best, &out_dir.join(SUMMARY_FILE))?;
    let mut pipelines: Vec<Pipeline> = best.iter().map(|r| r.config.pipeline).collect();
    pipelines.sort();
    pipelines.dedup();
    for p in pipelines {
        let subset: Vec<EvaluationReport> = best.iter().filter(|r| r.config.pipeline == p).cloned().collect();
        selection_rates(&subset)?.write_csv(&out_dir.join(format!("selection_rates_{}.csv", pipeline_key(&p))))?;
    }
    write_comparisons(&compare_learners(&best)?, &out_dir.join(COMPARISONS_FILE))?;
    Ok(best)
}
