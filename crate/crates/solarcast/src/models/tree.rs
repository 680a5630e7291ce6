//! Greedy CART regression tree with exhaustive threshold scan and weighted
//! variance reduction.
//!
//! Splits scan every candidate feature's sorted unique values; ties break to
//! the lowest feature index, then the lowest threshold, so training is
//! bit-reproducible. Sample weights exist for second-order boosting, where
//! hessians weight the surrogate targets.

use serde::{Deserialize, Serialize};

use crate::data::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 6,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Fitted regression tree stored as a flat arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub config: TreeConfig,
}

impl DecisionTree {
    /// Index of the leaf this row lands in.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.rows().map(|r| self.predict_row(r)).collect()
    }

    pub fn set_leaf_value(&mut self, leaf: usize, value: f64) {
        match &mut self.nodes[leaf] {
            Node::Leaf { value: v } => *v = value,
            Node::Split { .. } => panic!("node {leaf} is not a leaf"),
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Best split found for one node, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Minimal variance reduction for a split to count as an improvement.
const MIN_GAIN: f64 = 1e-12;

/// Exhaustive best split over the given candidate features for the rows in
/// `idx`: maximizes weighted variance reduction, honoring the leaf-size
/// floor on both sides.
pub fn best_split(
    x: &Matrix,
    y: &[f64],
    w: &[f64],
    idx: &[usize],
    features: &[usize],
    min_samples_leaf: usize,
) -> Option<SplitChoice> {
    let (mut tw, mut twy, mut twyy) = (0.0, 0.0, 0.0);
    for &i in idx {
        tw += w[i];
        twy += w[i] * y[i];
        twyy += w[i] * y[i] * y[i];
    }
    if tw <= 0.0 {
        return None;
    }
    let parent_sse = twyy - twy * twy / tw;

    let mut best: Option<SplitChoice> = None;
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(idx.len());
    for &feature in features {
        order.clear();
        order.extend(idx.iter().map(|&i| (x.get(i, feature), i)));
        order.sort_by(|a, b| a.0.total_cmp(&b.0));

        let (mut lw, mut lwy, mut lwyy) = (0.0, 0.0, 0.0);
        let mut left_count = 0usize;
        for k in 0..order.len() - 1 {
            let (v, i) = order[k];
            lw += w[i];
            lwy += w[i] * y[i];
            lwyy += w[i] * y[i] * y[i];
            left_count += 1;
            let next_v = order[k + 1].0;
            if next_v <= v {
                continue; // ties must stay on one side
            }
            if left_count < min_samples_leaf || idx.len() - left_count < min_samples_leaf {
                continue;
            }
            let rw = tw - lw;
            if lw <= 0.0 || rw <= 0.0 {
                continue;
            }
            let left_sse = lwyy - lwy * lwy / lw;
            let right_sse = (twyy - lwyy) - (twy - lwy) * (twy - lwy) / rw;
            let gain = parent_sse - left_sse - right_sse;
            if gain > MIN_GAIN && best.map_or(true, |b| gain > b.gain) {
                best = Some(SplitChoice {
                    feature,
                    threshold: (v + next_v) / 2.0,
                    gain,
                });
            }
        }
    }
    best
}

fn weighted_mean(y: &[f64], w: &[f64], idx: &[usize]) -> f64 {
    let (mut tw, mut twy) = (0.0, 0.0);
    for &i in idx {
        tw += w[i];
        twy += w[i] * y[i];
    }
    if tw > 0.0 {
        twy / tw
    } else {
        0.0
    }
}

/// Fits a CART tree; `sampler` picks the candidate features for each split
/// (identity for plain trees, random subsets for forests).
pub fn fit_tree_sampled(
    x: &Matrix,
    y: &[f64],
    w: Option<&[f64]>,
    cfg: &TreeConfig,
    sampler: &mut dyn FnMut(usize) -> Vec<usize>,
) -> DecisionTree {
    let unit;
    let w = match w {
        Some(w) => w,
        None => {
            unit = vec![1.0; y.len()];
            &unit
        }
    };
    let mut tree = DecisionTree {
        nodes: Vec::new(),
        config: *cfg,
    };
    let idx: Vec<usize> = (0..y.len()).collect();
    build(&mut tree, x, y, w, idx, 0, cfg, sampler);
    tree
}

/// Fits a CART tree considering every feature at every split.
pub fn fit_tree(x: &Matrix, y: &[f64], w: Option<&[f64]>, cfg: &TreeConfig) -> DecisionTree {
    let all: Vec<usize> = (0..x.n_cols()).collect();
    fit_tree_sampled(x, y, w, cfg, &mut |_| all.clone())
}

fn build(
    tree: &mut DecisionTree,
    x: &Matrix,
    y: &[f64],
    w: &[f64],
    idx: Vec<usize>,
    depth: usize,
    cfg: &TreeConfig,
    sampler: &mut dyn FnMut(usize) -> Vec<usize>,
) -> usize {
    let me = tree.nodes.len();
    tree.nodes.push(Node::Leaf {
        value: weighted_mean(y, w, &idx),
    });
    if depth >= cfg.max_depth || idx.len() < 2 * cfg.min_samples_leaf.max(1) {
        return me;
    }
    let features = sampler(x.n_cols());
    let Some(choice) = best_split(x, y, w, &idx, &features, cfg.min_samples_leaf) else {
        return me;
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
        .iter()
        .partition(|&&i| x.get(i, choice.feature) <= choice.threshold);
    let left = build(tree, x, y, w, left_idx, depth + 1, cfg, sampler);
    let right = build(tree, x, y, w, right_idx, depth + 1, cfg, sampler);
    tree.nodes[me] = Node::Split {
        feature: choice.feature,
        threshold: choice.threshold,
        left,
        right,
    };
    me
}
