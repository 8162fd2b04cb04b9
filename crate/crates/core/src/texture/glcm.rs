//! Gray-level co-occurrence matrices.
//!
//! Levels are 1-based throughout: a window quantized to `n_levels` levels
//! uses values `1..=n_levels`, and matrix entry `(i, j)` is stored at
//! `(i - 1) * n_levels + (j - 1)`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GlcmAngle {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl GlcmAngle {
    pub fn from_degrees(deg: u32) -> Result<Self> {
        match deg {
            0 => Ok(GlcmAngle::Deg0),
            45 => Ok(GlcmAngle::Deg45),
            90 => Ok(GlcmAngle::Deg90),
            135 => Ok(GlcmAngle::Deg135),
            other => Err(Error::invalid(format!(
                "GLCM angle must be 0, 45, 90 or 135 degrees, got {other}"
            ))),
        }
    }

    pub fn degrees(self) -> u32 {
        match self {
            GlcmAngle::Deg0 => 0,
            GlcmAngle::Deg45 => 45,
            GlcmAngle::Deg90 => 90,
            GlcmAngle::Deg135 => 135,
        }
    }

    /// Pixel offset `(dx, dy)` of the neighbour, y growing downwards.
    pub fn offset(self, delta: usize) -> (isize, isize) {
        let d = delta as isize;
        match self {
            GlcmAngle::Deg0 => (d, 0),
            GlcmAngle::Deg45 => (d, -d),
            GlcmAngle::Deg90 => (0, -d),
            GlcmAngle::Deg135 => (-d, -d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlcmParams {
    pub delta: usize,
    pub angle: GlcmAngle,
    pub n_levels: usize,
    pub symmetric: bool,
}

impl GlcmParams {
    pub fn new(n_levels: usize) -> Self {
        Self {
            delta: 1,
            angle: GlcmAngle::Deg0,
            n_levels,
            symmetric: true,
        }
    }
}

/// Quantized window; `None` marks pixels outside the region of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRaster {
    pub width: usize,
    pub height: usize,
    pub levels: Vec<Option<u32>>,
}

impl LevelRaster {
    pub fn from_levels(width: usize, height: usize, levels: &[u32]) -> Result<Self> {
        if levels.len() != width * height {
            return Err(Error::invalid("level raster length mismatch"));
        }
        Ok(Self {
            width,
            height,
            levels: levels.iter().map(|&l| Some(l)).collect(),
        })
    }

    #[inline]
    fn at(&self, x: isize, y: isize) -> Option<u32> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return None;
        }
        self.levels[y as usize * self.width + x as usize]
    }
}

/// Raw pair counts for the window, symmetrized when requested.
pub(crate) fn cooccurrence_counts(window: &LevelRaster, params: &GlcmParams) -> Result<Vec<u64>> {
    if params.delta == 0 {
        return Err(Error::invalid("GLCM distance must be >= 1"));
    }
    let n = params.n_levels;
    if n == 0 {
        return Err(Error::invalid("GLCM needs at least one level"));
    }
    let (dx, dy) = params.angle.offset(params.delta);
    let mut counts = vec![0u64; n * n];
    let mut pairs = 0u64;
    for y in 0..window.height as isize {
        for x in 0..window.width as isize {
            let (Some(a), Some(b)) = (window.at(x, y), window.at(x + dx, y + dy)) else {
                continue;
            };
            let (a, b) = (a as usize, b as usize);
            if a == 0 || b == 0 || a > n || b > n {
                return Err(Error::invalid(format!(
                    "level out of range 1..={n}: ({a}, {b})"
                )));
            }
            counts[(a - 1) * n + (b - 1)] += 1;
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::NoPairs);
    }
    if params.symmetric {
        symmetrize(&mut counts, n);
    }
    Ok(counts)
}

/// `P <- P + Pᵀ`.
pub(crate) fn symmetrize(counts: &mut [u64], n: usize) {
    for i in 0..n {
        counts[i * n + i] *= 2;
        for j in (i + 1)..n {
            let s = counts[i * n + j] + counts[j * n + i];
            counts[i * n + j] = s;
            counts[j * n + i] = s;
        }
    }
}

pub fn compute_glcm(window: &LevelRaster, params: &GlcmParams) -> Result<GlcmState> {
    let counts = cooccurrence_counts(window, params)?;
    GlcmState::from_counts(counts, params.n_levels)
}

/// Normalized co-occurrence matrix with every marginal and auxiliary
/// quantity the second-order features draw on.
#[derive(Debug, Clone, PartialEq)]
pub struct GlcmState {
    pub(crate) n_levels: usize,
    pub(crate) counts: Vec<u64>,
    pub(crate) p: Vec<f64>,
    pub(crate) px: Vec<f64>,
    pub(crate) py: Vec<f64>,
    pub(crate) mu_x: f64,
    pub(crate) mu_y: f64,
    pub(crate) sigma_x: f64,
    pub(crate) sigma_y: f64,
    /// p_{x+y}(k) at index k - 2, k = 2..=2N_g.
    pub(crate) p_sum: Vec<f64>,
    /// p_{x-y}(k) at index k, k = 0..N_g.
    pub(crate) p_diff: Vec<f64>,
    pub(crate) hx: f64,
    pub(crate) hy: f64,
    pub(crate) hxy: f64,
    pub(crate) hxy1: f64,
    pub(crate) hxy2: f64,
    pub(crate) diff_average: f64,
}

#[inline]
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

impl GlcmState {
    pub fn from_counts(counts: Vec<u64>, n_levels: usize) -> Result<Self> {
        let n = n_levels;
        if n == 0 || counts.len() != n * n {
            return Err(Error::invalid(format!(
                "count matrix of length {} does not match {n} levels",
                counts.len()
            )));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::NoPairs);
        }
        let total_f = total as f64;
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / total_f).collect();

        let mut px = vec![0.0; n];
        let mut py = vec![0.0; n];
        let mut p_sum = vec![0.0; 2 * n - 1];
        let mut p_diff = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let v = p[i * n + j];
                if v == 0.0 {
                    continue;
                }
                px[i] += v;
                py[j] += v;
                p_sum[i + j] += v;
                p_diff[i.abs_diff(j)] += v;
            }
        }
        let level = |i: usize| (i + 1) as f64;
        let mu_x: f64 = px.iter().enumerate().map(|(i, &v)| level(i) * v).sum();
        let mu_y: f64 = py.iter().enumerate().map(|(j, &v)| level(j) * v).sum();
        let sigma_x = px
            .iter()
            .enumerate()
            .map(|(i, &v)| (level(i) - mu_x).powi(2) * v)
            .sum::<f64>()
            .sqrt();
        let sigma_y = py
            .iter()
            .enumerate()
            .map(|(j, &v)| (level(j) - mu_y).powi(2) * v)
            .sum::<f64>()
            .sqrt();

        let hx = -px.iter().map(|&v| plogp(v)).sum::<f64>();
        let hy = -py.iter().map(|&v| plogp(v)).sum::<f64>();
        let hxy = -p.iter().map(|&v| plogp(v)).sum::<f64>();
        let mut hxy1 = 0.0;
        let mut hxy2 = 0.0;
        for i in 0..n {
            if px[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if py[j] == 0.0 {
                    continue;
                }
                let prod = px[i] * py[j];
                let lp = prod.ln();
                hxy1 -= p[i * n + j] * lp;
                hxy2 -= prod * lp;
            }
        }
        let diff_average = p_diff.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();

        Ok(Self {
            n_levels: n,
            counts,
            p,
            px,
            py,
            mu_x,
            mu_y,
            sigma_x,
            sigma_y,
            p_sum,
            p_diff,
            hx,
            hy,
            hxy,
            hxy1,
            hxy2,
            diff_average,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    /// Raw (possibly symmetrized) pair counts, row-major.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// p(i, j) for 1-based levels.
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[(i - 1) * self.n_levels + (j - 1)]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.p
    }

    pub fn px(&self) -> &[f64] {
        &self.px
    }

    pub fn py(&self) -> &[f64] {
        &self.py
    }

    pub fn means(&self) -> (f64, f64) {
        (self.mu_x, self.mu_y)
    }

    pub fn std_devs(&self) -> (f64, f64) {
        (self.sigma_x, self.sigma_y)
    }

    /// p_{x+y}(k) for k = 2..=2N_g, starting at k = 2.
    pub fn sum_distribution(&self) -> &[f64] {
        &self.p_sum
    }

    /// p_{x-y}(k) for k = 0..N_g.
    pub fn diff_distribution(&self) -> &[f64] {
        &self.p_diff
    }

    /// (HX, HY, HXY, HXY1, HXY2) in nats.
    pub fn entropies(&self) -> (f64, f64, f64, f64, f64) {
        (self.hx, self.hy, self.hxy, self.hxy1, self.hxy2)
    }

    pub fn difference_average(&self) -> f64 {
        self.diff_average
    }

    /// Q(i, j) = Σ_k p(i,k) p(j,k) / (p_x(i) p_y(k)) restricted to levels
    /// with p_x(i) > 0. Returns the surviving 1-based levels and the
    /// row-major square matrix over them.
    pub fn q_matrix(&self) -> (Vec<usize>, Vec<f64>) {
        let n = self.n_levels;
        let rows: Vec<usize> = (0..n).filter(|&i| self.px[i] > 0.0).collect();
        let m = rows.len();
        let mut q = vec![0.0; m * m];
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in rows.iter().enumerate() {
                let mut s = 0.0;
                for k in 0..n {
                    if self.py[k] > 0.0 {
                        s += self.p[i * n + k] * self.p[j * n + k] / (self.px[i] * self.py[k]);
                    }
                }
                q[a * m + b] = s;
            }
        }
        (rows.iter().map(|i| i + 1).collect(), q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_example() {
        let w = LevelRaster::from_levels(2, 2, &[1, 1, 1, 2]).unwrap();
        let g = compute_glcm(&w, &GlcmParams::new(2)).unwrap();
        assert_eq!(g.counts(), &[2, 1, 1, 0]);
        assert_eq!(g.matrix(), &[0.5, 0.25, 0.25, 0.0]);
        assert_eq!(g.px(), g.py());
    }

    #[test]
    fn constant_window_single_entry() {
        let w = LevelRaster::from_levels(3, 3, &[1; 9]).unwrap();
        let g = compute_glcm(&w, &GlcmParams::new(1)).unwrap();
        assert_eq!(g.matrix(), &[1.0]);
    }

    #[test]
    fn no_pairs_for_single_pixel() {
        let w = LevelRaster::from_levels(1, 1, &[1]).unwrap();
        let err = compute_glcm(&w, &GlcmParams::new(1)).unwrap_err();
        assert_eq!(err.to_string(), "no co-occurring pairs");
    }

    #[test]
    fn asymmetric_and_angles() {
        // 0 1
        // 2 3   (levels +1)
        let w = LevelRaster::from_levels(2, 2, &[1, 2, 3, 4]).unwrap();
        let mut params = GlcmParams::new(4);
        params.symmetric = false;
        let g = compute_glcm(&w, &params).unwrap();
        assert_eq!(g.counts()[0 * 4 + 1], 1);
        assert_eq!(g.counts()[2 * 4 + 3], 1);
        params.angle = GlcmAngle::Deg90;
        let g = compute_glcm(&w, &params).unwrap();
        // pixel (0,1)=3 looks up to (0,0)=1
        assert_eq!(g.counts()[2 * 4 + 0], 1);
        assert_eq!(g.counts()[3 * 4 + 1], 1);
        params.angle = GlcmAngle::Deg45;
        let g = compute_glcm(&w, &params).unwrap();
        assert_eq!(g.counts()[2 * 4 + 1], 1);
        assert_eq!(g.counts().iter().sum::<u64>(), 1);
        params.angle = GlcmAngle::Deg135;
        let g = compute_glcm(&w, &params).unwrap();
        assert_eq!(g.counts()[3 * 4 + 0], 1);
    }

    #[test]
    fn masked_pixels_are_skipped() {
        let w = LevelRaster {
            width: 3,
            height: 1,
            levels: vec![Some(1), None, Some(2)],
        };
        assert!(matches!(compute_glcm(&w, &GlcmParams::new(2)), Err(Error::NoPairs)));
    }

    #[test]
    fn normalization_invariants() {
        let levels: Vec<u32> = (0..49).map(|i| (i * 7 % 5 + 1) as u32).collect();
        let w = LevelRaster::from_levels(7, 7, &levels).unwrap();
        let g = compute_glcm(&w, &GlcmParams::new(5)).unwrap();
        let total: f64 = g.matrix().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((g.sum_distribution().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((g.diff_distribution().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in g.px().iter().zip(g.py()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
