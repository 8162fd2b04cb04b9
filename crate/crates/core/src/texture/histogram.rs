use crate::{Error, Result};

pub const DEFAULT_BIN_WIDTH: f64 = 0.1;

/// Index of the bin holding `x` on the 0-anchored grid of width `bin_width`.
///
/// Negative intensities fall in negative bins, so the grid still has an
/// edge at 0 but covers standardized data.
#[inline]
pub fn grid_bin(x: f64, bin_width: f64) -> i64 {
    (x / bin_width).floor() as i64
}

/// Histogram of a set of intensities on the 0-anchored grid, starting at the
/// bin of the smallest value and ending at the bin of the largest.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowHistogram {
    first_bin: i64,
    bin_width: f64,
    counts: Vec<u64>,
    n_pixels: u64,
}

impl WindowHistogram {
    /// Builds from dense counts whose first entry is grid bin `first_bin`.
    pub fn from_grid_counts(first_bin: i64, bin_width: f64, counts: Vec<u64>) -> Result<Self> {
        if !(bin_width > 0.0) {
            return Err(Error::invalid("bin width must be > 0"));
        }
        let n_pixels = counts.iter().sum();
        if counts.is_empty() || n_pixels == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(Self {
            first_bin,
            bin_width,
            counts,
            n_pixels,
        })
    }

    /// Left edge of bin 0.
    pub fn origin(&self) -> f64 {
        self.first_bin as f64 * self.bin_width
    }

    pub fn first_bin(&self) -> i64 {
        self.first_bin
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n_pixels(&self) -> u64 {
        self.n_pixels
    }

    /// Number of discrete levels, N_g.
    pub fn n_levels(&self) -> usize {
        self.counts.len()
    }

    /// Level (1-based) of a value relative to this histogram's first bin.
    pub fn level_of(&self, x: f64) -> i64 {
        grid_bin(x, self.bin_width) - self.first_bin + 1
    }

    pub fn normalized(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n_pixels as f64;
        self.counts.iter().map(move |&c| c as f64 / n)
    }

    /// Shannon entropy of s(i) in nats, over non-empty bins.
    pub fn entropy(&self) -> f64 {
        -self
            .normalized()
            .filter(|&s| s > 0.0)
            .map(|s| s * s.ln())
            .sum::<f64>()
    }

    pub fn uniformity(&self) -> f64 {
        self.normalized().map(|s| s * s).sum()
    }
}

pub fn window_histogram(values: &[f64], bin_width: f64) -> Result<WindowHistogram> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(bin_width > 0.0) {
        return Err(Error::invalid("bin width must be > 0"));
    }
    let bins: Vec<i64> = values.iter().map(|&v| grid_bin(v, bin_width)).collect();
    let lo = *bins.iter().min().expect("non-empty");
    let hi = *bins.iter().max().expect("non-empty");
    let mut counts = vec![0u64; (hi - lo + 1) as usize];
    for b in bins {
        counts[(b - lo) as usize] += 1;
    }
    WindowHistogram::from_grid_counts(lo, bin_width, counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_binning() {
        let h = window_histogram(&[0.0, 0.05, 0.15], 0.1).unwrap();
        assert_eq!(h.counts(), &[2, 1]);
        assert_eq!(h.n_levels(), 2);
        assert_eq!(h.origin(), 0.0);
    }

    #[test]
    fn single_and_constant() {
        let h = window_histogram(&[3.14], 0.1).unwrap();
        assert_eq!(h.counts(), &[1]);
        assert_eq!(h.normalized().collect::<Vec<_>>(), vec![1.0]);
        let h = window_histogram(&[-0.42; 9], 0.1).unwrap();
        assert_eq!(h.n_levels(), 1);
        assert_eq!(h.uniformity(), 1.0);
        assert_eq!(h.entropy(), 0.0);
    }

    #[test]
    fn negative_origin_is_grid_aligned() {
        let h = window_histogram(&[-0.25, 0.31], 0.1).unwrap();
        assert!((h.origin() - (-0.3)).abs() < 1e-12);
        assert_eq!(h.n_levels(), 7);
        assert_eq!(h.counts().iter().sum::<u64>(), 2);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(window_histogram(&[], 0.1), Err(Error::EmptyInput)));
        assert!(window_histogram(&[1.0], 0.0).is_err());
    }

    #[test]
    fn uniform_four_bins() {
        let h = WindowHistogram::from_grid_counts(0, 0.1, vec![1, 1, 1, 1]).unwrap();
        assert!((h.entropy() - 4f64.ln()).abs() < 1e-15);
        assert!((h.uniformity() - 0.25).abs() < 1e-15);
        let total: f64 = h.normalized().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
