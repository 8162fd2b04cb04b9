//! Eigenvalues of small dense symmetric matrices: Householder reduction to
//! tridiagonal form followed by Sturm-sequence bisection.

/// Reduces the row-major symmetric `n x n` matrix in place and returns the
/// tridiagonal (diagonal, off-diagonal) pair.
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for k in 0..n.saturating_sub(2) {
        let norm = ((k + 1)..n).map(|i| a[i * n + k].powi(2)).sum::<f64>().sqrt();
        let x0 = a[(k + 1) * n + k];
        if norm == 0.0 {
            off[k] = 0.0;
            continue;
        }
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for i in (k + 1)..n {
            v[i] = a[i * n + k];
        }
        v[k + 1] -= alpha;
        let vnorm = ((k + 1)..n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            off[k] = x0;
            continue;
        }
        for i in (k + 1)..n {
            v[i] /= vnorm;
        }
        // A <- H A H with H = I - 2 v vᵀ on the trailing block
        for i in (k + 1)..n {
            p[i] = ((k + 1)..n).map(|j| a[i * n + j] * v[j]).sum();
        }
        let kk: f64 = ((k + 1)..n).map(|i| v[i] * p[i]).sum();
        for i in (k + 1)..n {
            p[i] -= kk * v[i];
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                a[i * n + j] -= 2.0 * (v[i] * p[j] + p[i] * v[j]);
            }
        }
        off[k] = alpha;
    }
    if n >= 2 {
        off[n - 2] = a[(n - 1) * n + (n - 2)];
    }
    let diag = (0..n).map(|i| a[i * n + i]).collect();
    (diag, off)
}

/// Number of eigenvalues strictly below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let e2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { e2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (x.abs() + f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `k`-th largest eigenvalue (1-based) of the symmetric row-major matrix.
///
/// The matrix is overwritten. Bisection stops once the bracket is within a
/// few ulps of its midpoint, well inside a 1e-10 absolute tolerance.
pub fn kth_largest_symmetric_eigenvalue(a: &mut [f64], n: usize, k: usize) -> f64 {
    assert!(k >= 1 && k <= n, "k={k} out of range for n={n}");
    assert_eq!(a.len(), n * n);
    if n == 1 {
        return a[0];
    }
    let (diag, off) = tridiagonalize(a, n);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let span = (hi - lo).abs().max(1.0);
    lo -= span * 1e-12;
    hi += span * 1e-12;
    // target is the ascending eigenvalue with index n - k
    let target = n - k + 1;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(&diag, &off, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}
