use serde::{Deserialize, Serialize};

use super::first_order::{central_moments, percentile_sorted};
use super::histogram::{grid_bin, DEFAULT_BIN_WIDTH};
use crate::imaging::RoiMask;
use crate::{Error, Result};

pub const SUMMARY_NAMES: [&str; 7] = [
    "mean", "median", "variance", "skewness", "kurtosis", "energy", "entropy",
];

/// The seven statistics taken over the ROI values of one parametric map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub mean: f64,
    pub median: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub energy: f64,
    pub entropy: f64,
}

impl MapSummary {
    pub fn values(&self) -> [f64; 7] {
        [
            self.mean,
            self.median,
            self.variance,
            self.skewness,
            self.kurtosis,
            self.energy,
            self.entropy,
        ]
    }
}

pub fn summarize_values(values: &[f64]) -> Result<MapSummary> {
    if values.len() < 2 {
        return Err(Error::invalid(format!(
            "map summary needs at least 2 ROI pixels, got {}",
            values.len()
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let mean = (sorted.iter().sum::<f64>() / n).clamp(lo, hi);
    let (variance, skewness, kurtosis) = if lo == hi {
        (0.0, 0.0, 0.0)
    } else {
        let (m2, m3, m4) = central_moments(&sorted, mean);
        if m2 > 0.0 {
            (m2, m3 / m2.powf(1.5), m4 / (m2 * m2))
        } else {
            (0.0, 0.0, 0.0)
        }
    };
    // histogram entropy on the same 0-anchored grid as the first-order maps,
    // counted from sorted bins so wide-ranged maps need no dense array
    let mut entropy = 0.0;
    let mut run_bin = grid_bin(sorted[0], DEFAULT_BIN_WIDTH);
    let mut run_len = 0usize;
    for &v in &sorted {
        let b = grid_bin(v, DEFAULT_BIN_WIDTH);
        if b != run_bin {
            let s = run_len as f64 / n;
            entropy -= s * s.ln();
            run_bin = b;
            run_len = 0;
        }
        run_len += 1;
    }
    let s = run_len as f64 / n;
    entropy -= s * s.ln();

    Ok(MapSummary {
        mean,
        median: percentile_sorted(&sorted, 0.5),
        variance,
        skewness,
        kurtosis,
        energy: sorted.iter().map(|x| x * x).sum(),
        entropy: entropy.max(0.0),
    })
}

/// Summarizes a row-major map over the pixels selected by `mask`.
pub fn summarize_map(map: &[f64], mask: &RoiMask) -> Result<MapSummary> {
    if map.len() != mask.bits().len() {
        return Err(Error::invalid(format!(
            "map has {} pixels, mask has {}",
            map.len(),
            mask.bits().len()
        )));
    }
    let values: Vec<f64> = map
        .iter()
        .zip(mask.bits())
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .collect();
    summarize_values(&values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_map() {
        let mask = RoiMask::full(3, 2);
        let s = summarize_map(&[3.0; 6], &mask).unwrap();
        assert_eq!((s.mean, s.median, s.variance, s.entropy), (3.0, 3.0, 0.0, 0.0));
        assert_eq!(s.energy, 54.0);
    }

    #[test]
    fn outlier_skews_right() {
        let s = summarize_values(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!(s.median, 3.0);
        assert!(s.skewness > 0.0);
        // five distinct bins, equal mass
        assert!((s.entropy - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn masked_selection_and_errors() {
        let mut mask = RoiMask::empty(2, 2);
        mask.set(1, 1, true);
        assert!(summarize_map(&[0.0, 1.0, 2.0, 3.0], &mask).is_err());
        mask.set(0, 0, true);
        let s = summarize_map(&[0.0, 1.0, 2.0, 3.0], &mask).unwrap();
        assert_eq!(s.mean, 1.5);
        assert!(summarize_map(&[0.0; 3], &mask).is_err());
    }
}
