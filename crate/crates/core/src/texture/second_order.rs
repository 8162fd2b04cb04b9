use serde::{Deserialize, Serialize};

use super::eigen::kth_largest_symmetric_eigenvalue;
use super::glcm::GlcmState;

pub const SECOND_ORDER_NAMES: [&str; 22] = [
    "sum_squares",
    "sum_entropy",
    "sum_average",
    "mcc",
    "maximum_probability",
    "joint_entropy",
    "joint_energy",
    "joint_average",
    "inverse_variance",
    "imc2",
    "imc1",
    "idn",
    "idm",
    "id",
    "difference_variance",
    "difference_entropy",
    "difference_average",
    "correlation",
    "contrast",
    "cluster_tendency",
    "cluster_shade",
    "cluster_prominence",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderVector {
    pub sum_squares: f64,
    pub sum_entropy: f64,
    pub sum_average: f64,
    pub mcc: f64,
    pub maximum_probability: f64,
    pub joint_entropy: f64,
    pub joint_energy: f64,
    pub joint_average: f64,
    pub inverse_variance: f64,
    pub imc2: f64,
    pub imc1: f64,
    pub idn: f64,
    pub idm: f64,
    pub id: f64,
    pub difference_variance: f64,
    pub difference_entropy: f64,
    pub difference_average: f64,
    pub correlation: f64,
    pub contrast: f64,
    pub cluster_tendency: f64,
    pub cluster_shade: f64,
    pub cluster_prominence: f64,
    /// Set when σ_x·σ_y = 0 and correlation was reported as 0.
    pub degenerate_correlation: bool,
}

impl SecondOrderVector {
    pub fn values(&self) -> [f64; 22] {
        [
            self.sum_squares,
            self.sum_entropy,
            self.sum_average,
            self.mcc,
            self.maximum_probability,
            self.joint_entropy,
            self.joint_energy,
            self.joint_average,
            self.inverse_variance,
            self.imc2,
            self.imc1,
            self.idn,
            self.idm,
            self.id,
            self.difference_variance,
            self.difference_entropy,
            self.difference_average,
            self.correlation,
            self.contrast,
            self.cluster_tendency,
            self.cluster_shade,
            self.cluster_prominence,
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        SECOND_ORDER_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| self.values()[i])
    }
}

/// √λ₂ of Q, computed through the symmetric matrix B·Bᵀ with
/// B(i,k) = p(i,k) / √(p_x(i) p_y(k)), which is similar to Q.
fn maximal_correlation(g: &GlcmState) -> f64 {
    let n = g.n_levels;
    let rows: Vec<usize> = (0..n).filter(|&i| g.px[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n).filter(|&k| g.py[k] > 0.0).collect();
    let m = rows.len();
    if m < 2 {
        return 1.0;
    }
    let mut b = vec![0.0; m * cols.len()];
    for (r, &i) in rows.iter().enumerate() {
        for (c, &k) in cols.iter().enumerate() {
            let v = g.p[i * n + k];
            if v > 0.0 {
                b[r * cols.len() + c] = v / (g.px[i] * g.py[k]).sqrt();
            }
        }
    }
    let nc = cols.len();
    let mut s = vec![0.0; m * m];
    for r1 in 0..m {
        let row1 = &b[r1 * nc..(r1 + 1) * nc];
        for r2 in r1..m {
            let row2 = &b[r2 * nc..(r2 + 1) * nc];
            let dot: f64 = row1.iter().zip(row2).map(|(x, y)| x * y).sum();
            s[r1 * m + r2] = dot;
            s[r2 * m + r1] = dot;
        }
    }
    let lambda2 = kth_largest_symmetric_eigenvalue(&mut s, m, 2);
    lambda2.clamp(0.0, 1.0).sqrt()
}

/// The 22 co-occurrence features. Entropy-family features use natural logs
/// over strictly positive probabilities and carry the usual minus sign.
pub fn second_order_features(g: &GlcmState) -> SecondOrderVector {
    let n = g.n_levels;
    let nf = n as f64;
    let (mu_x, mu_y) = (g.mu_x, g.mu_y);

    let mut sum_squares = 0.0;
    let mut maximum_probability = 0.0f64;
    let mut joint_energy = 0.0;
    let mut joint_average = 0.0;
    let mut cross = 0.0;
    let mut contrast = 0.0;
    let (mut tendency, mut shade, mut prominence) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let li = (i + 1) as f64;
        for j in 0..n {
            let v = g.p[i * n + j];
            if v == 0.0 {
                continue;
            }
            let lj = (j + 1) as f64;
            sum_squares += (li - mu_x).powi(2) * v;
            maximum_probability = maximum_probability.max(v);
            joint_energy += v * v;
            joint_average += li * v;
            cross += li * lj * v;
            contrast += (li - lj).powi(2) * v;
            let c = li + lj - mu_x - mu_y;
            let c2 = c * c;
            tendency += c2 * v;
            shade += c2 * c * v;
            prominence += c2 * c2 * v;
        }
    }

    let mut sum_average = 0.0;
    let mut sum_entropy = 0.0;
    for (idx, &v) in g.p_sum.iter().enumerate() {
        if v > 0.0 {
            sum_average += (idx + 2) as f64 * v;
            sum_entropy -= v * v.ln();
        }
    }

    let mut inverse_variance = 0.0;
    let (mut idn, mut idm, mut id) = (0.0, 0.0, 0.0);
    let mut difference_variance = 0.0;
    let mut difference_entropy = 0.0;
    for (k, &v) in g.p_diff.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let kf = k as f64;
        if k >= 1 {
            inverse_variance += v / (kf * kf);
        }
        idn += v / (1.0 + kf / nf);
        idm += v / (1.0 + kf * kf);
        id += v / (1.0 + kf);
        difference_variance += (kf - g.diff_average).powi(2) * v;
        difference_entropy -= v * v.ln();
    }

    let denom = g.sigma_x * g.sigma_y;
    let (correlation, degenerate_correlation) = if denom > 0.0 {
        (((cross - mu_x * mu_y) / denom).clamp(-1.0, 1.0), false)
    } else {
        (0.0, true)
    };

    let hmax = g.hx.max(g.hy);
    let imc1 = if hmax > 0.0 { (g.hxy - g.hxy1) / hmax } else { 0.0 };
    let imc2 = (1.0 - (-2.0 * (g.hxy2 - g.hxy).max(0.0)).exp()).max(0.0).sqrt();

    SecondOrderVector {
        sum_squares,
        sum_entropy,
        sum_average,
        mcc: maximal_correlation(g),
        maximum_probability,
        joint_entropy: g.hxy,
        joint_energy,
        joint_average,
        inverse_variance,
        imc2,
        imc1,
        idn,
        idm,
        id,
        difference_variance,
        difference_entropy,
        difference_average: g.diff_average,
        correlation,
        contrast,
        cluster_tendency: tendency,
        cluster_shade: shade,
        cluster_prominence: prominence,
        degenerate_correlation,
    }
}
