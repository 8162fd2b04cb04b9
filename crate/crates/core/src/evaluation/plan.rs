//! Train/test partitions for repeated k-fold and leave-one-centre-out.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::seeded;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Scheme {
    RepeatedKfold {
        k: usize,
        repetitions: usize,
        seed: u64,
        stratified: bool,
    },
    Loco,
}

impl Scheme {
    pub fn label(&self) -> String {
        match self {
            Scheme::RepeatedKfold { k, repetitions, .. } => format!("{k}-fold x{repetitions}"),
            Scheme::Loco => "LOCO".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub repetition: usize,
    pub index: usize,
    /// Ascending row indices.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub centre: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub scheme: Scheme,
    pub n_rows: usize,
    pub folds: Vec<Fold>,
}

/// Sizes of `k` contiguous chunks of `n`, larger chunks first.
fn chunk_sizes(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| n / k + usize::from(i < n % k)).collect()
}

fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut in_test = vec![false; n];
    test.iter().for_each(|&i| in_test[i] = true);
    (0..n).filter(|&i| !in_test[i]).collect()
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be >= 2, got {k}")));
    }
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds the {n} rows")));
    }
    Ok(())
}

/// Test folds of one stratified split: each class is shuffled and dealt
/// round-robin, continuing across classes, so fold sizes differ by at
/// most one and class proportions are preserved.
pub fn stratified_test_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    check_k(labels.len(), k)?;
    let mut rng = seeded(seed, &[]);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| (labels[i] != 0) as u8 == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next % k].push(i);
            next += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

fn plain_test_folds(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seeded(seed, &[]));
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for size in chunk_sizes(n, k) {
        let mut f = perm[start..start + size].to_vec();
        f.sort_unstable();
        out.push(f);
        start += size;
    }
    out
}

fn build(n: usize, k: usize, repetitions: usize, seed: u64, labels: Option<&[u8]>) -> Result<FoldPlan> {
    check_k(n, k)?;
    if repetitions == 0 {
        return Err(Error::invalid("repetitions must be >= 1"));
    }
    let mut folds = Vec::with_capacity(k * repetitions);
    for rep in 0..repetitions {
        let rep_seed = crate::rng::derive_seed(seed, &[rep as u64]);
        let tests = match labels {
            Some(l) => stratified_test_folds(l, k, rep_seed)?,
            None => plain_test_folds(n, k, rep_seed),
        };
        for (index, test) in tests.into_iter().enumerate() {
            folds.push(Fold {
                repetition: rep,
                index,
                train: complement(n, &test),
                test,
                centre: None,
            });
        }
    }
    Ok(FoldPlan {
        scheme: Scheme::RepeatedKfold {
            k,
            repetitions,
            seed,
            stratified: labels.is_some(),
        },
        n_rows: n,
        folds,
    })
}

/// Repeated k-fold: per repetition a seeded shuffle, then `k` contiguous
/// chunks whose sizes differ by at most one.
pub fn kfold_plan(n: usize, k: usize, repetitions: usize, seed: u64) -> Result<FoldPlan> {
    build(n, k, repetitions, seed, None)
}

pub fn stratified_kfold_plan(labels: &[u8], k: usize, repetitions: usize, seed: u64) -> Result<FoldPlan> {
    build(labels.len(), k, repetitions, seed, Some(labels))
}

/// One fold per distinct centre, in sorted centre order.
pub fn loco_plan(centres: &[String]) -> Result<FoldPlan> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, c) in centres.iter().enumerate() {
        groups.entry(c.as_str()).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(Error::InsufficientGroups {
            needed: 2,
            got: groups.len(),
        });
    }
    let n = centres.len();
    let folds = groups
        .into_iter()
        .enumerate()
        .map(|(index, (centre, test))| Fold {
            repetition: 0,
            index,
            train: complement(n, &test),
            test,
            centre: Some(centre.to_string()),
        })
        .collect();
    Ok(FoldPlan {
        scheme: Scheme::Loco,
        n_rows: n,
        folds,
    })
}

impl FoldPlan {
    pub fn repetitions(&self) -> usize {
        self.folds.iter().map(|f| f.repetition + 1).max().unwrap_or(0)
    }

    /// Checks that each repetition's test folds partition the rows and that
    /// every train set is the complement of its test set.
    pub fn validate(&self) -> Result<()> {
        for rep in 0..self.repetitions() {
            let mut seen = vec![0u32; self.n_rows];
            for f in self.folds.iter().filter(|f| f.repetition == rep) {
                if f.test.is_empty() {
                    return Err(Error::invalid(format!("empty test fold {} in repetition {rep}", f.index)));
                }
                for &i in &f.test {
                    seen[i] += 1;
                }
                if f.train != complement(self.n_rows, &f.test) {
                    return Err(Error::invalid(format!("fold {} train is not the test complement", f.index)));
                }
            }
            if let Some(i) = seen.iter().position(|&c| c != 1) {
                return Err(Error::invalid(format!(
                    "row {i} appears {} times in the test folds of repetition {rep}",
                    seen[i]
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singleton_folds() {
        let p = kfold_plan(10, 10, 1, 0).unwrap();
        assert_eq!(p.folds.len(), 10);
        assert!(p.folds.iter().all(|f| f.test.len() == 1));
        p.validate().unwrap();
    }

    #[test]
    fn size_rule() {
        let p = kfold_plan(7, 3, 1, 5).unwrap();
        let sizes: Vec<usize> = p.folds.iter().map(|f| f.test.len()).collect();
        assert_eq!(sizes, [3, 2, 2]);
        assert!(kfold_plan(3, 4, 1, 0).is_err());
        assert!(kfold_plan(3, 1, 1, 0).is_err());
    }

    #[test]
    fn seeded_plans_repeat() {
        assert_eq!(kfold_plan(50, 10, 3, 7).unwrap(), kfold_plan(50, 10, 3, 7).unwrap());
        assert_ne!(kfold_plan(50, 10, 1, 7).unwrap(), kfold_plan(50, 10, 1, 8).unwrap());
    }

    #[test]
    fn loco_examples() {
        let c: Vec<String> = ["A", "B", "A", "B", "B"].iter().map(|s| s.to_string()).collect();
        let p = loco_plan(&c).unwrap();
        assert_eq!(p.folds.len(), 2);
        assert_eq!(p.folds[0].test, [0, 2]);
        assert_eq!(p.folds[1].test.len(), 3);
        assert_eq!(p.folds[1].centre.as_deref(), Some("B"));
        p.validate().unwrap();
        assert!(loco_plan(&vec!["A".to_string(); 3]).is_err());
    }

    #[test]
    fn stratified_keeps_proportions() {
        let labels: Vec<u8> = (0..50).map(|i| (i < 20) as u8).collect();
        let p = stratified_kfold_plan(&labels, 5, 2, 1).unwrap();
        p.validate().unwrap();
        for f in &p.folds {
            let pos = f.test.iter().filter(|&&i| labels[i] == 1).count();
            assert_eq!(pos, 4);
        }
    }

    proptest! {
        #[test]
        fn kfold_partitions(n in 2usize..80, k in 2usize..12, reps in 1usize..4, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let p = kfold_plan(n, k, reps, seed).unwrap();
            prop_assert!(p.validate().is_ok());
            prop_assert_eq!(p.folds.len(), k * reps);
            let sizes: Vec<usize> = p.folds.iter().map(|f| f.test.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }

        #[test]
        fn loco_partitions(centres in proptest::collection::vec(0u8..5, 2..60)) {
            let c: Vec<String> = centres.iter().map(|v| format!("C{v}")).collect();
            let distinct: std::collections::BTreeSet<_> = c.iter().collect();
            prop_assume!(distinct.len() >= 2);
            let p = loco_plan(&c).unwrap();
            prop_assert!(p.validate().is_ok());
            prop_assert_eq!(p.folds.len(), distinct.len());
            for f in &p.folds {
                let centre = f.centre.as_ref().unwrap();
                prop_assert!(f.test.iter().all(|&i| &c[i] == centre));
                prop_assert!(f.train.iter().all(|&i| &c[i] != centre));
            }
        }
    }
}
