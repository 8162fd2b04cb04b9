//! Mutual information between a continuous feature and the binary label,
//! using the k-nearest-neighbour estimator for mixed continuous/discrete
//! pairs, and the filter built on it.

use rayon::prelude::*;
use statrs::function::gamma::digamma;

use super::matrix::FeatureMatrix;
use crate::rng::{derive_seed, seeded, standard_normal};
use crate::{Error, Result};

pub const DEFAULT_NEIGHBORS: usize = 3;

fn next_down(r: f64) -> f64 {
    if r > 0.0 {
        f64::from_bits(r.to_bits() - 1)
    } else {
        r
    }
}

/// Distance from `s[j]` to its `k`-th nearest neighbour within the sorted
/// slice `s`, excluding itself.
fn kth_neighbour_distance(s: &[f64], j: usize, k: usize) -> f64 {
    let (mut l, mut r) = (j as isize - 1, j + 1);
    let x = s[j];
    let mut d = 0.0;
    for _ in 0..k {
        let dl = if l >= 0 { x - s[l as usize] } else { f64::INFINITY };
        let dr = if r < s.len() { s[r] - x } else { f64::INFINITY };
        if dl <= dr {
            d = dl;
            l -= 1;
        } else {
            d = dr;
            r += 1;
        }
    }
    d
}

/// Estimate in nats, clamped at 0. The feature is scaled to unit variance
/// and perturbed by 1e-10-scale Gaussian jitter (seeded) to break ties.
pub fn mutual_information(feature: &[f64], labels: &[u8], k: usize, seed: u64) -> Result<f64> {
    let n = feature.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: (n, 1),
            found: (labels.len(), 1),
        });
    }
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    if n < k + 1 {
        return Err(Error::invalid(format!("need at least {} samples, got {n}", k + 1)));
    }
    if feature.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("feature has non-finite values"));
    }
    let n_pos = labels.iter().filter(|&&l| l != 0).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::SingleClass);
    }

    let mean = feature.iter().sum::<f64>() / n as f64;
    let std = (feature.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if std == 0.0 {
        return Ok(0.0);
    }
    let mut x: Vec<f64> = feature.iter().map(|v| v / std).collect();
    let amp = 1e-10 * (x.iter().map(|v| v.abs()).sum::<f64>() / n as f64).max(1.0);
    let mut rng = seeded(seed, &[0x4d49]);
    for v in &mut x {
        *v += amp * standard_normal(&mut rng);
    }

    let mut per_class: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (&v, &l) in x.iter().zip(labels) {
        per_class[(l != 0) as usize].push(v);
    }
    for s in &mut per_class {
        s.sort_unstable_by(f64::total_cmp);
    }
    // classes with one member carry no neighbour information
    let usable: Vec<&Vec<f64>> = per_class.iter().filter(|s| s.len() > 1).collect();
    let mut all: Vec<f64> = usable.iter().flat_map(|s| s.iter().copied()).collect();
    all.sort_unstable_by(f64::total_cmp);
    let total = all.len();

    let (mut sum_k, mut sum_nc, mut sum_m) = (0.0, 0.0, 0.0);
    for s in &usable {
        let kc = k.min(s.len() - 1);
        let dk = digamma(kc as f64);
        let dnc = digamma(s.len() as f64);
        for j in 0..s.len() {
            let xi = s[j];
            let radius = next_down(kth_neighbour_distance(s, j, kc));
            let lo = all.partition_point(|&v| xi - v > radius);
            let hi = all.partition_point(|&v| v - xi <= radius);
            let m = (hi - lo).max(1);
            sum_k += dk;
            sum_nc += dnc;
            sum_m += digamma(m as f64);
        }
    }
    let t = total as f64;
    let mi = digamma(t) + sum_k / t - sum_nc / t - sum_m / t;
    Ok(mi.max(0.0))
}

/// Stable per-column stream id so that a column's jitter does not depend
/// on its position in the matrix.
fn name_stream(name: &str) -> u64 {
    // FNV-1a
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Top-`d_pr` of `columns` by MI with the labels; ties go to the column
/// whose name sorts first. Returns names in decreasing-MI order.
pub fn mi_filter(
    m: &FeatureMatrix,
    columns: &[usize],
    d_pr: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<String>> {
    if d_pr == 0 {
        return Err(Error::invalid("d_pr must be >= 1"));
    }
    if d_pr > columns.len() {
        return Err(Error::invalid(format!(
            "d_pr = {d_pr} exceeds the {} candidate columns",
            columns.len()
        )));
    }
    let mut scored = columns
        .par_iter()
        .map(|&c| {
            let s = derive_seed(seed, &[name_stream(&m.names[c])]);
            mutual_information(&m.column(c), &m.labels, k, s).map(|mi| (mi, c))
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| m.names[a.1].cmp(&m.names[b.1])));
    Ok(scored.into_iter().take(d_pr).map(|(_, c)| m.names[c].clone()).collect())
}

/// Number of pre-selected image descriptors tried: every 2 up to 10, every
/// 5 up to 50, then all of them.
pub fn d_pr_grid(max_features: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = [2, 4, 6, 8, 10]
        .into_iter()
        .chain((15..=50).step_by(5))
        .filter(|&d| d < max_features)
        .collect();
    if max_features >= 1 {
        grid.push(max_features);
    }
    grid
}
