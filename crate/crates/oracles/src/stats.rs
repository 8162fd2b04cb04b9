use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Midranks of the pooled sample.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let less = values.iter().filter(|&&v| v < values[i]).count() as f64;
            let equal = values.iter().filter(|&&v| v == values[i]).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// U statistic of `a` by pair counting.
pub fn u_by_pairs(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for &x in a {
        for &y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// Exact two-sided Mann-Whitney p by enumerating every way of assigning
/// `a.len()` of the pooled values to the first group.
pub fn mwu_exact_enumeration(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).cloned().collect();
    let n = pooled.len();
    let na = a.len();
    let observed = u_by_pairs(a, b);
    let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
    for bits in 0u32..(1 << n) {
        if bits.count_ones() as usize != na {
            continue;
        }
        let ga: Vec<f64> = (0..n).filter(|i| bits >> i & 1 == 1).map(|i| pooled[i]).collect();
        let gb: Vec<f64> = (0..n).filter(|i| bits >> i & 1 == 0).map(|i| pooled[i]).collect();
        let u = u_by_pairs(&ga, &gb);
        total += 1;
        if u <= observed + 1e-9 {
            le += 1;
        }
        if u >= observed - 1e-9 {
            ge += 1;
        }
    }
    (2.0 * (le.min(ge) as f64) / total as f64).min(1.0)
}

/// Two-sided p of Pearson's chi-square with Yates' correction on the 2x2
/// table [[x1, n1-x1], [x2, n2-x2]].
pub fn yates_chi_square_p(x1: u64, n1: u64, x2: u64, n2: u64) -> f64 {
    let (a, b, c, d) = (x1 as f64, (n1 - x1) as f64, x2 as f64, (n2 - x2) as f64);
    let n = a + b + c + d;
    let num = ((a * d - b * c).abs() - n / 2.0).max(0.0);
    let den = (a + b) * (c + d) * (a + c) * (b + d);
    if den == 0.0 {
        return 1.0;
    }
    let chi2 = n * num * num / den;
    1.0 - ChiSquared::new(1.0).unwrap().cdf(chi2)
}
