use std::collections::BTreeMap;

use nalgebra::DMatrix;

fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        v[lo]
    } else {
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    }
}

/// Histogram probabilities s(i) on the grid of width `w` anchored at 0.
pub fn histogram_probabilities(values: &[f64], w: f64) -> Vec<f64> {
    let mut bins: BTreeMap<i64, usize> = BTreeMap::new();
    for &v in values {
        *bins.entry((v / w).floor() as i64).or_default() += 1;
    }
    let n = values.len() as f64;
    bins.values().map(|&c| c as f64 / n).collect()
}

/// Reference first-order features, keyed by feature name.
pub fn first_order(values: &[f64], bin_width: f64, spacing: f64) -> BTreeMap<&'static str, f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let energy: f64 = values.iter().map(|x| x.powi(2)).sum();
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let m4 = values.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let s = histogram_probabilities(values, bin_width);
    let p10 = percentile(values, 0.1);
    let p90 = percentile(values, 0.9);
    let robust: Vec<f64> = values.iter().cloned().filter(|&x| x >= p10 && x <= p90).collect();
    let rmean = robust.iter().sum::<f64>() / robust.len() as f64;
    let mut out = BTreeMap::new();
    out.insert("energy", energy);
    out.insert("total_energy", spacing * spacing * energy);
    out.insert("entropy", -s.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>());
    out.insert("minimum", min);
    out.insert("maximum", max);
    out.insert("mean", mean);
    out.insert("median", percentile(values, 0.5));
    out.insert("interquartile_range", percentile(values, 0.75) - percentile(values, 0.25));
    out.insert("range", max - min);
    out.insert("mad", values.iter().map(|x| (x - mean).abs()).sum::<f64>() / n);
    out.insert(
        "robust_mad",
        robust.iter().map(|x| (x - rmean).abs()).sum::<f64>() / robust.len() as f64,
    );
    out.insert("rms", (energy / n).sqrt());
    out.insert("skewness", m3 / var.sqrt().powi(3));
    out.insert("kurtosis", m4 / var.powi(2));
    out.insert("variance", var);
    out.insert("uniformity", s.iter().map(|p| p * p).sum());
    out.insert("p10", p10);
    out.insert("p90", p90);
    out
}

/// Symmetric (or not) co-occurrence probabilities of a 1-based level
/// raster at offset (dx, dy); `None` pixels are skipped.
pub fn cooccurrence(
    width: usize,
    height: usize,
    levels: &[Option<u32>],
    n_levels: usize,
    offset: (isize, isize),
    symmetric: bool,
) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; n_levels]; n_levels];
    let mut total = 0.0;
    for y in 0..height as isize {
        for x in 0..width as isize {
            let (nx, ny) = (x + offset.0, y + offset.1);
            if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                continue;
            }
            let a = levels[(y as usize) * width + x as usize];
            let b = levels[(ny as usize) * width + nx as usize];
            if let (Some(a), Some(b)) = (a, b) {
                p[a as usize - 1][b as usize - 1] += 1.0;
                total += 1.0;
                if symmetric {
                    p[b as usize - 1][a as usize - 1] += 1.0;
                    total += 1.0;
                }
            }
        }
    }
    for row in &mut p {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    p
}

/// Second largest real eigenvalue of the (non-symmetric) Q matrix, found
/// with a general Schur decomposition.
pub fn mcc(p: &[Vec<f64>]) -> f64 {
    let n = p.len();
    let px: Vec<f64> = (0..n).map(|i| p[i].iter().sum()).collect();
    let py: Vec<f64> = (0..n).map(|j| (0..n).map(|i| p[i][j]).sum()).collect();
    let active: Vec<usize> = (0..n).filter(|&i| px[i] > 0.0).collect();
    if active.len() < 2 {
        return 1.0;
    }
    let m = active.len();
    let q = DMatrix::from_fn(m, m, |a, b| {
        let (i, j) = (active[a], active[b]);
        (0..n)
            .filter(|&k| py[k] > 0.0)
            .map(|k| p[i][k] * p[j][k] / (px[i] * py[k]))
            .sum::<f64>()
    });
    // The unbounded Schur iteration can stall on the rank-deficient Q of
    // small windows; fall back to the symmetric similar form there.
    let mut eig: Vec<f64> = match q.clone().try_schur(1e-14, 100_000) {
        Some(schur) => schur.complex_eigenvalues().iter().map(|c| c.re).collect(),
        None => {
            let dx = DMatrix::from_fn(m, m, |a, b| if a == b { px[active[a]].powf(-0.5) } else { 0.0 });
            let dxi = DMatrix::from_fn(m, m, |a, b| if a == b { px[active[a]].sqrt() } else { 0.0 });
            (dxi * q * dx).symmetric_eigenvalues().iter().cloned().collect()
        }
    };
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eig[1].clamp(0.0, 1.0).sqrt()
}

/// Reference co-occurrence features computed by direct double sums over
/// p(i, j) with 1-based levels.
pub fn second_order(p: &[Vec<f64>]) -> BTreeMap<&'static str, f64> {
    let n = p.len();
    let ng = n as f64;
    let lv = |i: usize| (i + 1) as f64;
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            px[i] += p[i][j];
            py[j] += p[i][j];
        }
    }
    let mu_x: f64 = (0..n).map(|i| lv(i) * px[i]).sum();
    let mu_y: f64 = (0..n).map(|j| lv(j) * py[j]).sum();
    let sd_x = (0..n).map(|i| (lv(i) - mu_x).powi(2) * px[i]).sum::<f64>().sqrt();
    let sd_y = (0..n).map(|j| (lv(j) - mu_y).powi(2) * py[j]).sum::<f64>().sqrt();

    let mut pplus = vec![0.0; 2 * n + 1];
    let mut pminus = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            pplus[i + j + 2] += p[i][j];
            pminus[i.abs_diff(j)] += p[i][j];
        }
    }
    let ent = |v: &[f64]| -v.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>();
    let hx = ent(&px);
    let hy = ent(&py);
    let flat: Vec<f64> = p.iter().flatten().cloned().collect();
    let hxy = ent(&flat);
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let prod = px[i] * py[j];
            if prod > 0.0 {
                hxy1 -= p[i][j] * prod.ln();
                hxy2 -= prod * prod.ln();
            }
        }
    }
    let sum_ij = |f: &dyn Fn(f64, f64, f64) -> f64| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += f(lv(i), lv(j), p[i][j]);
            }
        }
        s
    };
    let da: f64 = (0..n).map(|k| k as f64 * pminus[k]).sum();
    let mut out = BTreeMap::new();
    out.insert("sum_squares", sum_ij(&|i, _, v| (i - mu_x).powi(2) * v));
    out.insert(
        "sum_entropy",
        -(2..=2 * n).filter(|&k| pplus[k] > 0.0).map(|k| pplus[k] * pplus[k].ln()).sum::<f64>(),
    );
    out.insert("sum_average", (2..=2 * n).map(|k| k as f64 * pplus[k]).sum());
    out.insert("mcc", mcc(p));
    out.insert("maximum_probability", flat.iter().cloned().fold(0.0, f64::max));
    out.insert("joint_entropy", hxy);
    out.insert("joint_energy", flat.iter().map(|v| v * v).sum());
    out.insert("joint_average", sum_ij(&|i, _, v| i * v));
    out.insert(
        "inverse_variance",
        (1..n).map(|k| pminus[k] / (k * k) as f64).sum(),
    );
    out.insert("imc2", (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt());
    out.insert("imc1", if hx.max(hy) > 0.0 { (hxy - hxy1) / hx.max(hy) } else { 0.0 });
    out.insert("idn", sum_ij(&|i, j, v| v / (1.0 + (i - j).abs() / ng)));
    out.insert("idm", sum_ij(&|i, j, v| v / (1.0 + (i - j).powi(2))));
    out.insert("id", sum_ij(&|i, j, v| v / (1.0 + (i - j).abs())));
    out.insert("difference_variance", (0..n).map(|k| (k as f64 - da).powi(2) * pminus[k]).sum());
    out.insert(
        "difference_entropy",
        -(0..n).filter(|&k| pminus[k] > 0.0).map(|k| pminus[k] * pminus[k].ln()).sum::<f64>(),
    );
    out.insert("difference_average", da);
    out.insert(
        "correlation",
        if sd_x * sd_y > 0.0 {
            (sum_ij(&|i, j, v| i * j * v) - mu_x * mu_y) / (sd_x * sd_y)
        } else {
            0.0
        },
    );
    out.insert("contrast", sum_ij(&|i, j, v| (i - j).powi(2) * v));
    out.insert("cluster_tendency", sum_ij(&|i, j, v| (i + j - mu_x - mu_y).powi(2) * v));
    out.insert("cluster_shade", sum_ij(&|i, j, v| (i + j - mu_x - mu_y).powi(3) * v));
    out.insert("cluster_prominence", sum_ij(&|i, j, v| (i + j - mu_x - mu_y).powi(4) * v));
    out
}

/// Window around (cx, cy) restricted to in-bounds ROI pixels: raw values in
/// raster order and the 1-based level raster (None outside the ROI).
pub struct NaiveWindow {
    pub values: Vec<f64>,
    pub width: usize,
    pub height: usize,
    pub levels: Vec<Option<u32>>,
    pub n_levels: usize,
}

pub fn naive_window(
    data: &[f64],
    mask: &[bool],
    width: usize,
    height: usize,
    cx: usize,
    cy: usize,
    window: usize,
    bin_width: f64,
) -> NaiveWindow {
    let r = window / 2;
    let x0 = cx.saturating_sub(r);
    let x1 = (cx + r).min(width - 1);
    let y0 = cy.saturating_sub(r);
    let y1 = (cy + r).min(height - 1);
    let mut values = Vec::new();
    let mut bins = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let i = y * width + x;
            if mask[i] {
                values.push(data[i]);
                bins.push(Some((data[i] / bin_width).floor() as i64));
            } else {
                bins.push(None);
            }
        }
    }
    let lo = bins.iter().flatten().min().copied().unwrap();
    let hi = bins.iter().flatten().max().copied().unwrap();
    NaiveWindow {
        values,
        width: x1 - x0 + 1,
        height: y1 - y0 + 1,
        levels: bins.iter().map(|b| b.map(|b| (b - lo + 1) as u32)).collect(),
        n_levels: (hi - lo + 1) as usize,
    }
}
