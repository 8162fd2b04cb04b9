//! Random forest of Gini CART trees grown to purity on bootstrap samples.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, seeded};

pub const N_TREES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        /// Fraction of class-1 samples reaching the leaf.
        p1: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn probability(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { p1 } => return p1,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    /// Mean decrease in impurity, normalized to sum to 1.
    pub importance: Vec<f64>,
}

impl Forest {
    pub fn probability(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.probability(row)).sum::<f64>() / self.trees.len() as f64
    }
}

fn gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    x: &'a [f64],
    d: usize,
    labels: &'a [u8],
    mtry: usize,
    n_root: f64,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
    importance: Vec<f64>,
    features: Vec<usize>,
    buf: Vec<(f64, u8)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl Builder<'_> {
    fn best_split(&mut self, samples: &[usize], pos: f64) -> Option<BestSplit> {
        let n = samples.len() as f64;
        let parent = gini(pos, n);
        self.features.shuffle(&mut self.rng);
        let mut best: Option<BestSplit> = None;
        let mut visited = 0;
        for fi in 0..self.d {
            if visited >= self.mtry && best.is_some() {
                break;
            }
            let f = self.features[fi];
            self.buf.clear();
            self.buf
                .extend(samples.iter().map(|&s| (self.x[s * self.d + f], self.labels[s])));
            self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if self.buf[0].0 == self.buf[self.buf.len() - 1].0 {
                continue;
            }
            visited += 1;
            let mut left_pos = 0.0;
            for i in 0..self.buf.len() - 1 {
                left_pos += self.buf[i].1 as f64;
                if self.buf[i].0 == self.buf[i + 1].0 {
                    continue;
                }
                let nl = (i + 1) as f64;
                let nr = n - nl;
                let child = (nl * gini(left_pos, nl) + nr * gini(pos - left_pos, nr)) / n;
                let decrease = parent - child;
                if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                    let (a, b) = (self.buf[i].0, self.buf[i + 1].0);
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        decrease,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, samples: &mut [usize]) -> usize {
        let at = self.nodes.len();
        let n = samples.len() as f64;
        let pos: f64 = samples.iter().map(|&s| self.labels[s] as f64).sum();
        self.nodes.push(TreeNode::Leaf { p1: pos / n });
        if samples.len() < 2 || pos == 0.0 || pos == n {
            return at;
        }
        let Some(split) = self.best_split(samples, pos) else {
            return at;
        };
        self.importance[split.feature] += n / self.n_root * split.decrease;
        let mut k = 0;
        for i in 0..samples.len() {
            if self.x[samples[i] * self.d + split.feature] <= split.threshold {
                samples.swap(i, k);
                k += 1;
            }
        }
        let (l, r) = samples.split_at_mut(k);
        let left = self.grow(l);
        let right = self.grow(r);
        self.nodes[at] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

fn fit_tree(x: &[f64], d: usize, labels: &[u8], seed: u64) -> (Tree, Vec<f64>) {
    let n = labels.len();
    let mut rng = seeded(seed, &[]);
    let mut samples: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut b = Builder {
        x,
        d,
        labels,
        mtry: ((d as f64).sqrt().floor() as usize).max(1),
        n_root: n as f64,
        rng,
        nodes: Vec::new(),
        importance: vec![0.0; d],
        features: (0..d).collect(),
        buf: Vec::with_capacity(n),
    };
    b.grow(&mut samples);
    let total: f64 = b.importance.iter().sum();
    if total > 0.0 {
        b.importance.iter_mut().for_each(|v| *v /= total);
    }
    (Tree { nodes: b.nodes }, b.importance)
}

pub(super) fn fit_forest(x: &[f64], d: usize, labels: &[u8], seed: u64) -> Forest {
    let fitted: Vec<(Tree, Vec<f64>)> = (0..N_TREES)
        .into_par_iter()
        .map(|t| fit_tree(x, d, labels, derive_seed(seed, &[t as u64])))
        .collect();
    let mut importance = vec![0.0; d];
    let mut trees = Vec::with_capacity(N_TREES);
    for (tree, imp) in fitted {
        for (a, b) in importance.iter_mut().zip(&imp) {
            *a += b;
        }
        trees.push(tree);
    }
    let total: f64 = importance.iter().sum();
    if total > 0.0 {
        importance.iter_mut().for_each(|v| *v /= total);
    }
    Forest { trees, importance }
}
