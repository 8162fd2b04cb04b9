//! Clinical tables, preprocessing, feature selection and learners.

mod matrix;
mod mi;
pub mod models;
mod preprocess;
mod rfecv;
mod schema;

pub use matrix::{
    is_missing_cell, label_name, parse_clinical_csv, parse_clinical_reader, parse_label, ColumnOrigin,
    FeatureMatrix, FeatureTable, MILD, SEVERE,
};
pub use matrix::format_value;
pub use mi::{d_pr_grid, mi_filter, mutual_information, DEFAULT_NEIGHBORS};
pub use models::{fit, LearnerKind, Model};
pub use preprocess::{impute_mean, mean_std, standardize_columns, train_means, ColumnScaling};
pub use rfecv::{rfecv, SelectionResult, DEFAULT_INNER_FOLDS};
pub use schema::{ClinicalSchema, ColumnKind, ColumnSpec};
