//! L2-regularized logistic regression and hinge-loss linear SVM.
//!
//! Both fit on internally standardized inputs and fold the scaling back
//! into the reported coefficients, so rescaling a column rescales its
//! coefficient inversely and leaves the decision function unchanged.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::seeded;

pub const C: f64 = 1.0;
const LR_GRAD_TOL: f64 = 1e-6;
const MAX_EPOCHS: usize = 1000;
const SVM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Weights on the standardized inputs.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LinearModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        let mut z = self.bias;
        for j in 0..self.weights.len() {
            z += self.weights[j] * (row[j] - self.means[j]) / self.scales[j];
        }
        z
    }

    /// Coefficients on the original inputs.
    pub fn coefficients(&self) -> Vec<f64> {
        self.weights.iter().zip(&self.scales).map(|(w, s)| w / s).collect()
    }

    pub fn intercept(&self) -> f64 {
        self.bias
            - self
                .weights
                .iter()
                .zip(&self.means)
                .zip(&self.scales)
                .map(|((w, m), s)| w * m / s)
                .sum::<f64>()
    }
}

/// Column means and population standard deviations, with 1 substituted
/// for constant columns.
fn column_scaling(x: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = (x.len() / d) as f64;
    let mut means = vec![0.0; d];
    for row in x.chunks_exact(d) {
        for j in 0..d {
            means[j] += row[j];
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = vec![0.0; d];
    for row in x.chunks_exact(d) {
        for j in 0..d {
            vars[j] += (row[j] - means[j]).powi(2);
        }
    }
    let scales = vars
        .iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (means, scales)
}

fn standardized(x: &[f64], d: usize, means: &[f64], scales: &[f64]) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, v)| (v - means[i % d]) / scales[i % d])
        .collect()
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Solves the symmetric positive definite system `a x = b` in place.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut s = a[j * n + j];
        for k in 0..j {
            s -= a[j * n + k] * a[j * n + k];
        }
        if s <= 0.0 {
            return false;
        }
        let l = s.sqrt();
        a[j * n + j] = l;
        for i in (j + 1)..n {
            let mut t = a[i * n + j];
            for k in 0..j {
                t -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = t / l;
        }
    }
    for i in 0..n {
        let mut t = b[i];
        for k in 0..i {
            t -= a[i * n + k] * b[k];
        }
        b[i] = t / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut t = b[i];
        for k in (i + 1)..n {
            t -= a[k * n + i] * b[k];
        }
        b[i] = t / a[i * n + i];
    }
    true
}

/// Minimizes ½‖w‖² + C Σ log(1 + exp(−yᵢ(w·xᵢ + b))) by damped Newton
/// steps; the intercept is not penalized.
pub(super) fn fit_logistic(x: &[f64], d: usize, labels: &[u8]) -> LinearModel {
    let (means, scales) = column_scaling(x, d);
    let z = standardized(x, d, &means, &scales);
    let p = d + 1;
    let mut theta = vec![0.0; p];

    let objective = |theta: &[f64]| -> f64 {
        let reg: f64 = theta[..d].iter().map(|w| w * w).sum::<f64>() * 0.5;
        let loss: f64 = z
            .chunks_exact(d)
            .zip(labels)
            .map(|(row, &l)| {
                let m = theta[d] + row.iter().zip(&theta[..d]).map(|(a, b)| a * b).sum::<f64>();
                let y = if l != 0 { 1.0 } else { -1.0 };
                softplus(-y * m)
            })
            .sum();
        reg + C * loss
    };

    let mut iterations = 0;
    let mut converged = false;
    let mut f = objective(&theta);
    while iterations < MAX_EPOCHS {
        let mut grad = vec![0.0; p];
        let mut hess = vec![0.0; p * p];
        grad[..d].copy_from_slice(&theta[..d]);
        for j in 0..d {
            hess[j * p + j] = 1.0;
        }
        for (row, &l) in z.chunks_exact(d).zip(labels) {
            let m = theta[d] + row.iter().zip(&theta[..d]).map(|(a, b)| a * b).sum::<f64>();
            let s = sigmoid(m);
            let r = C * (s - l as f64);
            let w = C * s * (1.0 - s);
            for j in 0..d {
                grad[j] += r * row[j];
            }
            grad[d] += r;
            for a in 0..p {
                let xa = if a < d { row[a] } else { 1.0 };
                for b in 0..=a {
                    let xb = if b < d { row[b] } else { 1.0 };
                    hess[a * p + b] += w * xa * xb;
                }
            }
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= LR_GRAD_TOL {
            converged = true;
            break;
        }
        for a in 0..p {
            for b in 0..a {
                hess[b * p + a] = hess[a * p + b];
            }
        }
        // tiny ridge keeps the unpenalized intercept block definite
        hess[d * p + d] += 1e-12;
        let mut step: Vec<f64> = grad.iter().map(|g| -g).collect();
        if !cholesky_solve(&mut hess, &mut step, p) {
            step = grad.iter().map(|g| -g).collect();
        }
        let slope: f64 = step.iter().zip(&grad).map(|(s, g)| s * g).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            let fc = objective(&cand);
            if fc <= f + 1e-4 * t * slope {
                theta = cand;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        if !accepted {
            // no decrease representable in floating point
            converged = gnorm <= 1e-8 * (1.0 + f.abs());
            break;
        }
    }
    if !converged {
        log::debug!("logistic regression stopped after {iterations} iterations");
    }
    LinearModel {
        means,
        scales,
        bias: theta[d],
        weights: theta[..d].to_vec(),
        iterations,
        converged,
    }
}

/// Dual coordinate descent for the hinge-loss SVM,
/// min ½‖w‖² + C Σ max(0, 1 − yᵢ(w·x̃ᵢ)) with x̃ = [x, 1].
pub(super) fn fit_svm(x: &[f64], d: usize, labels: &[u8], seed: u64) -> LinearModel {
    let (means, scales) = column_scaling(x, d);
    let z = standardized(x, d, &means, &scales);
    let n = labels.len();
    let y: Vec<f64> = labels.iter().map(|&l| if l != 0 { 1.0 } else { -1.0 }).collect();
    let qdiag: Vec<f64> = z
        .chunks_exact(d)
        .map(|row| row.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .collect();
    let mut w = vec![0.0; d + 1];
    let mut alpha = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seeded(seed, &[0x5356]);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_EPOCHS {
        order.shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let row = &z[i * d..(i + 1) * d];
            let wx = w[d] + row.iter().zip(&w[..d]).map(|(a, b)| a * b).sum::<f64>();
            let g = y[i] * wx - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == C {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / qdiag[i]).clamp(0.0, C);
                let delta = (alpha[i] - old) * y[i];
                for j in 0..d {
                    w[j] += delta * row[j];
                }
                w[d] += delta;
            }
        }
        iterations += 1;
        if pg_max - pg_min <= SVM_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("linear SVM stopped after {iterations} epochs");
    }
    LinearModel {
        means,
        scales,
        bias: w[d],
        weights: w[..d].to_vec(),
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves() {
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let mut b = vec![2.0, 1.0];
        assert!(cholesky_solve(&mut a, &mut b, 2));
        assert!((b[0] - 0.5).abs() < 1e-15 && b[1].abs() < 1e-15);
    }

    #[test]
    fn logistic_gradient_vanishes() {
        let x = [0.0, 1.0, 2.0, 3.0, 1.5, 0.5];
        let y = [0, 0, 1, 1, 1, 0];
        let m = fit_logistic(&x, 1, &y);
        assert!(m.converged);
        // stationarity of the standardized problem
        let (means, scales) = column_scaling(&x, 1);
        let mut g = m.weights[0];
        let mut gb = 0.0;
        for (v, &l) in x.iter().zip(&y) {
            let z = (v - means[0]) / scales[0];
            let r = sigmoid(m.weights[0] * z + m.bias) - l as f64;
            g += r * z;
            gb += r;
        }
        assert!(g.abs() < 1e-6 && gb.abs() < 1e-6);
        assert!((m.intercept() + m.coefficients()[0] * means[0] - m.bias).abs() < 1e-12);
    }

    #[test]
    fn svm_margin_on_easy_data() {
        let x = [-2.0, -1.0, 1.0, 2.0];
        let y = [0, 0, 1, 1];
        let m = fit_svm(&x, 1, &y, 0);
        assert!(m.converged);
        assert!(x.iter().zip(&y).all(|(v, &l)| (m.decision(&[*v]) > 0.0) == (l == 1)));
    }
}
