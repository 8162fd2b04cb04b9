pub mod cohort_stats;
pub mod experiment;
pub mod extract;
pub mod report;
pub mod synthesize;
