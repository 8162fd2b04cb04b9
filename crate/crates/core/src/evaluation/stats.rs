//! Two-group and k-group rank tests and the two-proportion z-test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use crate::{Error, Result};

/// Two-sided p for a standard normal statistic.
fn two_sided_normal_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// Midranks of `values`, plus the tie term Σ(t³ − t) over tie groups.
pub fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwuMode {
    Exact,
    NormalApprox,
    /// Exact when n_a + n_b <= 16, otherwise the normal approximation.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U of the first sample: pairs (a, b) with a > b, ties counting ½.
    pub u: f64,
    pub u_b: f64,
    pub p: f64,
    pub exact: bool,
}

pub const EXACT_LIMIT: usize = 16;

pub fn mann_whitney_u(a: &[f64], b: &[f64], mode: MwuMode) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::invalid("NaN in Mann-Whitney sample"));
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let ra: f64 = ranks[..na].iter().sum();
    let u = ra - (na * (na + 1)) as f64 / 2.0;
    let u_b = (na * nb) as f64 - u;
    let exact = match mode {
        MwuMode::Exact => true,
        MwuMode::NormalApprox => false,
        MwuMode::Auto => na + nb <= EXACT_LIMIT,
    };
    let p = if exact {
        exact_p(&ranks, na, u)
    } else {
        let n = (na + nb) as f64;
        let mu = (na * nb) as f64 / 2.0;
        let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
        if var <= 0.0 {
            1.0
        } else {
            let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
            two_sided_normal_p(z)
        }
    };
    Ok(MannWhitney { u, u_b, p, exact })
}

/// Two-sided p from the permutation distribution of the rank sum given the
/// observed (possibly tied) midranks. Doubled midranks are integers, so
/// the distribution is a subset-sum count over them.
fn exact_p(ranks: &[f64], na: usize, u: f64) -> f64 {
    let twice: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = twice.iter().sum();
    // counts[j][s]: subsets of size j with doubled rank sum s
    let mut counts = vec![vec![0.0f64; max_sum + 1]; na + 1];
    counts[0][0] = 1.0;
    for (seen, &r) in twice.iter().enumerate() {
        for j in (1..=na.min(seen + 1)).rev() {
            let (lower, upper) = counts.split_at_mut(j);
            let (src, dst) = (&lower[j - 1], &mut upper[0]);
            for s in (r..=max_sum).rev() {
                if src[s - r] != 0.0 {
                    dst[s] += src[s - r];
                }
            }
        }
    }
    let offset = na * (na + 1); // doubled na(na+1)/2
    let observed = (2.0 * u).round() as usize + offset;
    let dist = &counts[na];
    let total: f64 = dist.iter().sum();
    let le: f64 = dist[..=observed.min(max_sum)].iter().sum();
    let ge: f64 = dist[observed.min(max_sum + 1)..].iter().sum();
    (2.0 * le.min(ge) / total).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionTest {
    pub z: f64,
    pub p: f64,
    /// Pooled proportion was 0 or 1; p is reported as 1.
    pub degenerate: bool,
}

/// Two-sided two-proportion z-test with pooled variance and Yates'
/// continuity correction, |p₁ − p₂| − ½(1/n₁ + 1/n₂) clamped at 0.
pub fn proportion_ztest_yates(x1: u64, n1: u64, x2: u64, n2: u64) -> Result<ProportionTest> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::invalid("group sizes must be >= 1"));
    }
    if x1 > n1 || x2 > n2 {
        return Err(Error::invalid(format!("counts exceed group sizes: {x1}/{n1}, {x2}/{n2}")));
    }
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1f + n2f);
    if pooled == 0.0 || pooled == 1.0 {
        return Ok(ProportionTest {
            z: 0.0,
            p: 1.0,
            degenerate: true,
        });
    }
    let diff = x1 as f64 / n1f - x2 as f64 / n2f;
    let corrected = (diff.abs() - 0.5 * (1.0 / n1f + 1.0 / n2f)).max(0.0);
    let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    let z = corrected / se * diff.signum();
    Ok(ProportionTest {
        z,
        p: two_sided_normal_p(z),
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub df: usize,
    pub p: f64,
}

fn check_groups(groups: &[Vec<f64>], needed: usize) -> Result<()> {
    if groups.len() < needed {
        return Err(Error::InsufficientGroups {
            needed,
            got: groups.len(),
        });
    }
    if let Some(g) = groups.iter().position(|g| g.len() < 2) {
        return Err(Error::invalid(format!("group {g} has fewer than 2 values")));
    }
    if groups.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::invalid("NaN in group values"));
    }
    Ok(())
}

/// Pooled midranks split back into groups, and the tie term.
fn group_ranks(groups: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64, f64) {
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let mut out = Vec::with_capacity(groups.len());
    let mut at = 0;
    for g in groups {
        out.push(ranks[at..at + g.len()].to_vec());
        at += g.len();
    }
    (out, ties, pooled.len() as f64)
}

/// H statistic with tie correction and its chi-square p (g − 1 df).
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KruskalWallis> {
    check_groups(groups, 3)?;
    let (ranks, ties, n) = group_ranks(groups);
    let mut h = 12.0 / (n * (n + 1.0))
        * ranks.iter().map(|r| r.iter().sum::<f64>().powi(2) / r.len() as f64).sum::<f64>()
        - 3.0 * (n + 1.0);
    let correction = 1.0 - ties / (n * n * n - n);
    let df = groups.len() - 1;
    if correction <= 0.0 {
        return Ok(KruskalWallis { h: 0.0, df, p: 1.0 });
    }
    h = (h / correction).max(0.0);
    let chi = ChiSquared::new(df as f64).expect("df >= 2");
    Ok(KruskalWallis {
        h,
        df,
        p: (1.0 - chi.cdf(h)).clamp(0.0, 1.0),
    })
}

pub fn bonferroni(p: f64, comparisons: usize) -> f64 {
    (p * comparisons as f64).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DunnPair {
    pub a: usize,
    pub b: usize,
    pub z: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
}

/// Dunn's pairwise rank comparisons, tie-corrected, Bonferroni-adjusted
/// over all g(g − 1)/2 pairs.
pub fn dunn_bonferroni(groups: &[Vec<f64>]) -> Result<Vec<DunnPair>> {
    check_groups(groups, 2)?;
    let (ranks, ties, n) = group_ranks(groups);
    let means: Vec<f64> = ranks.iter().map(|r| r.iter().sum::<f64>() / r.len() as f64).collect();
    let g = groups.len();
    let m = g * (g - 1) / 2;
    let base = n * (n + 1.0) / 12.0 - ties / (12.0 * (n - 1.0));
    let mut out = Vec::with_capacity(m);
    for a in 0..g {
        for b in (a + 1)..g {
            let se = (base * (1.0 / groups[a].len() as f64 + 1.0 / groups[b].len() as f64)).sqrt();
            let z = if se > 0.0 { (means[a] - means[b]) / se } else { 0.0 };
            let p_raw = two_sided_normal_p(z);
            out.push(DunnPair {
                a,
                b,
                z,
                p_raw,
                p_adjusted: bonferroni(p_raw, m),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mwu_examples() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0], MwuMode::Exact).unwrap();
        assert_eq!(r.u, 0.0);
        assert!((r.p - 1.0 / 3.0).abs() < 1e-15);
        let s = [1.0, 2.0, 3.0];
        assert_eq!(mann_whitney_u(&s, &s, MwuMode::Exact).unwrap().p, 1.0);
        assert!(mann_whitney_u(&[], &s, MwuMode::Auto).is_err());
        assert!(mann_whitney_u(&s, &[4.0, 5.0], MwuMode::Auto).unwrap().exact);
    }

    #[test]
    fn yates_examples() {
        let t = proportion_ztest_yates(30, 100, 30, 100).unwrap();
        assert_eq!(t.p, 1.0);
        let t = proportion_ztest_yates(30, 100, 50, 100).unwrap();
        assert!((t.p - 0.00610).abs() < 5e-5, "{}", t.p);
        assert!(proportion_ztest_yates(5, 4, 1, 4).is_err());
        assert!(proportion_ztest_yates(0, 10, 0, 12).unwrap().degenerate);
    }

    #[test]
    fn kruskal_examples() {
        let g = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]];
        let r = kruskal_wallis(&g).unwrap();
        assert!((r.h - 7.2).abs() < 1e-12);
        assert!((r.p - 0.0273).abs() < 1e-4);
        let same = vec![vec![1.0, 2.0, 3.0]; 3];
        let r = kruskal_wallis(&same).unwrap();
        assert!(r.h.abs() < 1e-12 && (r.p - 1.0).abs() < 1e-12);
        assert!(kruskal_wallis(&g[..2]).is_err());
        assert!((bonferroni(0.02, 3) - 0.06).abs() < 1e-15);
    }

    #[test]
    fn dunn_adjusts_upward() {
        let g = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0, 9.0]];
        for pair in dunn_bonferroni(&g).unwrap() {
            assert!(pair.p_adjusted >= pair.p_raw && pair.p_adjusted <= 1.0);
        }
    }

    proptest! {
        #[test]
        fn mwu_symmetry(a in proptest::collection::vec(0u8..6, 1..8), b in proptest::collection::vec(0u8..6, 1..8)) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ab = mann_whitney_u(&a, &b, MwuMode::Exact).unwrap();
            let ba = mann_whitney_u(&b, &a, MwuMode::Exact).unwrap();
            prop_assert!((ab.p - ba.p).abs() < 1e-12);
            prop_assert_eq!(ab.u + ab.u_b, (a.len() * b.len()) as f64);
            prop_assert_eq!(ab.u, ba.u_b);
        }
    }
}
