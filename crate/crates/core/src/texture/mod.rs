//! First-order and co-occurrence texture statistics, their sliding-window
//! parametric maps, and the per-map summaries that form an image's
//! feature vector.

mod eigen;
mod extract;
mod first_order;
mod glcm;
mod histogram;
mod maps;
mod second_order;
mod summary;

pub use eigen::kth_largest_symmetric_eigenvalue;
pub use extract::{extract_image_features, summarize_maps, ExtractionConfig, FeatureVector};
pub use first_order::{first_order_features, FirstOrderVector, FIRST_ORDER_NAMES};
pub use glcm::{compute_glcm, GlcmAngle, GlcmParams, GlcmState, LevelRaster};
pub use histogram::{grid_bin, window_histogram, WindowHistogram, DEFAULT_BIN_WIDTH};
pub use maps::{
    feature_names, parametric_maps, FeatureSelection, MapConfig, MapManifest, ParametricMapSet,
    PreparedImage, SlidingWindow, WindowSnapshot, MAX_WINDOW_LEVELS,
};
pub use second_order::{second_order_features, SecondOrderVector, SECOND_ORDER_NAMES};
pub use summary::{summarize_map, summarize_values, MapSummary, SUMMARY_NAMES};
