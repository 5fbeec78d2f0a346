//! Random forest of Gini-split decision trees with leaf class histograms.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GalError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 30,
            max_depth: 12,
            min_leaf: 2,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        histogram: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { histogram } => return histogram,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_features: usize,
    pub n_classes: usize,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Build a forest directly from trees (for tests and tooling).
    pub fn from_trees(
        n_features: usize,
        n_classes: usize,
        trees: Vec<Tree>,
    ) -> Result<ForestModel> {
        let m = ForestModel {
            n_features,
            n_classes,
            trees,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trees.is_empty() {
            return Err(GalError::Parameter("forest has no trees".into()));
        }
        for t in &self.trees {
            for node in &t.nodes {
                match node {
                    Node::Leaf { histogram } => {
                        let s: f64 = histogram.iter().sum();
                        if histogram.len() != self.n_classes || (s - 1.0).abs() > 1e-9 {
                            return Err(GalError::Parameter("invalid leaf histogram".into()));
                        }
                    }
                    Node::Split {
                        feature,
                        left,
                        right,
                        ..
                    } => {
                        if *feature >= self.n_features
                            || *left >= t.nodes.len()
                            || *right >= t.nodes.len()
                        {
                            return Err(GalError::Parameter("invalid split node".into()));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Mean of the leaf histograms reached in every tree.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(GalError::Length {
                expected: self.n_features,
                found: x.len(),
            });
        }
        let mut out = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (o, v) in out.iter_mut().zip(t.leaf(x)) {
                *o += v;
            }
        }
        let k = self.trees.len() as f64;
        for o in out.iter_mut() {
            *o /= k;
        }
        Ok(out)
    }
}

pub fn train_forest(
    features: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    params: &ForestParams,
) -> Result<ForestModel> {
    train_forest_weighted(
        features,
        labels,
        &vec![1.0; labels.len()],
        n_classes,
        params,
    )
}

/// Train with per-sample weights (bootstrap is uniform; weights enter the
/// Gini impurity and the leaf histograms).
pub fn train_forest_weighted(
    features: &[Vec<f64>],
    labels: &[usize],
    weights: &[f64],
    n_classes: usize,
    params: &ForestParams,
) -> Result<ForestModel> {
    if params.n_trees == 0 {
        return Err(GalError::Parameter("n_trees must be >= 1".into()));
    }
    if features.is_empty() {
        return Err(GalError::Parameter("empty training set".into()));
    }
    if labels.len() != features.len() || weights.len() != features.len() {
        return Err(GalError::Length {
            expected: features.len(),
            found: labels.len().min(weights.len()),
        });
    }
    if n_classes == 0 || labels.iter().any(|&l| l >= n_classes) {
        return Err(GalError::Parameter("label out of range".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(GalError::Parameter(
            "sample weights must be positive".into(),
        ));
    }
    let d = features[0].len();
    if d == 0 || features.iter().any(|f| f.len() != d) {
        return Err(GalError::Parameter("inconsistent feature dimension".into()));
    }
    let ctx = Context {
        x: features,
        y: labels,
        w: weights,
        n_classes,
        n_candidates: ((d as f64).sqrt().round() as usize).clamp(1, d),
        max_depth: params.max_depth,
        min_leaf: params.min_leaf.max(1),
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                params.seed.wrapping_mul(0x9E37_79B9).wrapping_add(t as u64),
            );
            let n = features.len();
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut nodes = Vec::new();
            ctx.grow(&mut nodes, idx, 0, &mut rng);
            Tree { nodes }
        })
        .collect();
    Ok(ForestModel {
        n_features: d,
        n_classes,
        trees,
    })
}

struct Context<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    w: &'a [f64],
    n_classes: usize,
    n_candidates: usize,
    max_depth: usize,
    min_leaf: usize,
}

fn gini(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total).powi(2)).sum::<f64>()
}

impl Context<'_> {
    fn histogram(&self, idx: &[usize]) -> Vec<f64> {
        let mut h = vec![0.0; self.n_classes];
        for &i in idx {
            h[self.y[i]] += self.w[i];
        }
        h
    }

    fn grow(
        &self,
        nodes: &mut Vec<Node>,
        idx: Vec<usize>,
        depth: usize,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let id = nodes.len();
        let hist = self.histogram(&idx);
        let total: f64 = hist.iter().sum();
        let pure = hist.iter().filter(|c| **c > 0.0).count() <= 1;
        let split = if pure || depth >= self.max_depth || idx.len() < 2 * self.min_leaf {
            None
        } else {
            self.best_split(&idx, &hist, total, rng)
        };
        match split {
            None => {
                nodes.push(Node::Leaf {
                    histogram: hist.iter().map(|c| c / total).collect(),
                });
                id
            }
            Some((feature, threshold)) => {
                nodes.push(Node::Leaf {
                    histogram: Vec::new(),
                });
                let (l, r): (Vec<usize>, Vec<usize>) = idx
                    .into_iter()
                    .partition(|&i| self.x[i][feature] <= threshold);
                let left = self.grow(nodes, l, depth + 1, rng);
                let right = self.grow(nodes, r, depth + 1, rng);
                nodes[id] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                id
            }
        }
    }

    fn best_split(
        &self,
        idx: &[usize],
        hist: &[f64],
        total: f64,
        rng: &mut ChaCha8Rng,
    ) -> Option<(usize, f64)> {
        let d = self.x[0].len();
        let parent = gini(hist, total);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut candidates: Vec<usize> = sample(rng, d, self.n_candidates).into_vec();
        candidates.sort_unstable();
        let mut order = idx.to_vec();
        for f in candidates {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left = vec![0.0; self.n_classes];
            let mut wl = 0.0;
            for k in 0..order.len() - 1 {
                let i = order[k];
                left[self.y[i]] += self.w[i];
                wl += self.w[i];
                let (v, next) = (self.x[i][f], self.x[order[k + 1]][f]);
                if v == next || k + 1 < self.min_leaf || order.len() - k - 1 < self.min_leaf {
                    continue;
                }
                let wr = total - wl;
                let right: Vec<f64> = hist.iter().zip(&left).map(|(h, l)| h - l).collect();
                let impurity = (wl * gini(&left, wl) + wr * gini(&right, wr)) / total;
                let gain = parent - impurity;
                if gain > 1e-12 && best.is_none_or(|b| gain > b.0) {
                    best = Some((gain, f, 0.5 * (v + next)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}
