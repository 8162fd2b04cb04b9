//! Radiograph and lung-mask ingestion, standardization, geometry and
//! overlap scoring.

mod io;
mod ops;
mod types;

pub use io::{
    load_image, load_mask, save_image_pgm16, save_mask, save_raw_with_sidecar, sidecar_path,
    ImageFormat, Sidecar,
};
pub use ops::{bounding_box, overlap_scores, resize_bilinear, resize_mask_nearest, standardize, Overlap};
pub use types::{GrayImage, Rect, RoiMask};
