use serde::{Deserialize, Serialize};

use super::histogram::WindowHistogram;
use crate::{Error, Result};

/// Names in emission order. `p10` and `p90` are appended in extended mode.
pub const FIRST_ORDER_NAMES: [&str; 16] = [
    "energy",
    "total_energy",
    "entropy",
    "minimum",
    "maximum",
    "mean",
    "median",
    "interquartile_range",
    "range",
    "mad",
    "robust_mad",
    "rms",
    "skewness",
    "kurtosis",
    "variance",
    "uniformity",
];

pub(crate) const EXTENDED_FIRST_ORDER_NAMES: [&str; 2] = ["p10", "p90"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderVector {
    pub energy: f64,
    pub total_energy: f64,
    pub entropy: f64,
    pub minimum: f64,
    pub maximum: f64,
    pub mean: f64,
    pub median: f64,
    pub interquartile_range: f64,
    pub range: f64,
    pub mad: f64,
    pub robust_mad: f64,
    pub rms: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub variance: f64,
    pub uniformity: f64,
    pub p10: f64,
    pub p90: f64,
}

impl FirstOrderVector {
    pub fn values(&self) -> [f64; 16] {
        [
            self.energy,
            self.total_energy,
            self.entropy,
            self.minimum,
            self.maximum,
            self.mean,
            self.median,
            self.interquartile_range,
            self.range,
            self.mad,
            self.robust_mad,
            self.rms,
            self.skewness,
            self.kurtosis,
            self.variance,
            self.uniformity,
        ]
    }

    pub fn extended_values(&self) -> [f64; 2] {
        [self.p10, self.p90]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        if let Some(i) = FIRST_ORDER_NAMES.iter().position(|&n| n == name) {
            return Some(self.values()[i]);
        }
        match name {
            "p10" => Some(self.p10),
            "p90" => Some(self.p90),
            _ => None,
        }
    }
}

/// Linear-interpolation percentile of an ascending slice, `q` in [0, 1].
pub(crate) fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Central moments m2, m3, m4 about `mean`.
pub(crate) fn central_moments(values: &[f64], mean: f64) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in values {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

/// First-order statistics of the intensities in `values`.
///
/// Entropy and uniformity come from `hist`; everything else from the raw
/// values. A window whose values are all equal reports zero variance,
/// skewness and kurtosis.
pub fn first_order_features(
    values: &[f64],
    hist: &WindowHistogram,
    pixel_spacing: f64,
) -> Result<FirstOrderVector> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if hist.n_pixels() != values.len() as u64 {
        return Err(Error::invalid(format!(
            "histogram holds {} pixels but {} values were given",
            hist.n_pixels(),
            values.len()
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let minimum = sorted[0];
    let maximum = sorted[sorted.len() - 1];
    let flat = minimum == maximum;

    let energy: f64 = sorted.iter().map(|x| x * x).sum();
    let mean = (sorted.iter().sum::<f64>() / n).clamp(minimum, maximum);
    let (variance, skewness, kurtosis) = if flat {
        (0.0, 0.0, 0.0)
    } else {
        let (m2, m3, m4) = central_moments(&sorted, mean);
        if m2 > 0.0 {
            (m2, m3 / m2.powf(1.5), m4 / (m2 * m2))
        } else {
            (0.0, 0.0, 0.0)
        }
    };
    let mad = sorted.iter().map(|x| (x - mean).abs()).sum::<f64>() / n;

    let p10 = percentile_sorted(&sorted, 0.10);
    let p25 = percentile_sorted(&sorted, 0.25);
    let median = percentile_sorted(&sorted, 0.50);
    let p75 = percentile_sorted(&sorted, 0.75);
    let p90 = percentile_sorted(&sorted, 0.90);

    let robust: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|&x| x >= p10 && x <= p90)
        .collect();
    let robust_mad = if robust.is_empty() {
        0.0
    } else {
        let rn = robust.len() as f64;
        let rmean = robust.iter().sum::<f64>() / rn;
        robust.iter().map(|x| (x - rmean).abs()).sum::<f64>() / rn
    };

    Ok(FirstOrderVector {
        energy,
        total_energy: pixel_spacing * pixel_spacing * energy,
        entropy: hist.entropy(),
        minimum,
        maximum,
        mean,
        median,
        interquartile_range: p75 - p25,
        range: maximum - minimum,
        mad,
        robust_mad,
        rms: (energy / n).sqrt(),
        skewness,
        kurtosis,
        variance,
        uniformity: hist.uniformity(),
        p10,
        p90,
    })
}
