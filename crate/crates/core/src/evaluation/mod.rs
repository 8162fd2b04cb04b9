//! Validation plans, metrics, statistical tests and experiment reports.

mod experiment;
mod metrics;
mod plan;
mod report;
mod stats;

pub use experiment::{
    pipeline_columns, run_experiment, Aggregate, EvaluationReport, ExperimentConfig, FoldResult, MeanStd, Pipeline,
    REPORT_FORMAT_VERSION,
};
pub use metrics::{classification_metrics, Metrics};
pub use plan::{kfold_plan, loco_plan, stratified_kfold_plan, stratified_test_folds, Fold, FoldPlan, Scheme};
pub use report::{selection_rates, write_summary_csv, SelectionRateRow, SelectionRateTable};
pub use stats::{
    bonferroni, dunn_bonferroni, kruskal_wallis, mann_whitney_u, midranks, proportion_ztest_yates, DunnPair,
    KruskalWallis, MannWhitney, MwuMode, ProportionTest, EXACT_LIMIT,
};
