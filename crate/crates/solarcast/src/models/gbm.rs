//! Gradient boosted trees: first-order stages fit to the negative gradient
//! with an exact per-leaf line search, and a second-order mode with
//! gradient/hessian leaf values, L2 leaf regularization, and seeded
//! row/column subsampling.
//!
//! Squared loss boosts the raw score; Tweedie loss boosts through a log
//! link, so predictions exp(score) are always positive.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Result, ToolError};
use crate::models::tree::{fit_tree_sampled, DecisionTree, Node, TreeConfig};
use crate::models::tweedie::{tweedie_grad_hess, tweedie_loss};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Squared,
    Tweedie { power: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostOrder {
    /// Stage trees fit the negative gradient; per-leaf step by line search.
    First,
    /// Leaf values -G/(H + l2) from gradient/hessian sums, with row and
    /// column subsampling per stage.
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbmConfig {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub loss: Loss,
    pub order: BoostOrder,
    /// Row fraction per stage (second-order mode only).
    pub row_subsample: f64,
    /// Column fraction per stage (second-order mode only).
    pub col_subsample: f64,
    /// L2 penalty on leaf values (second-order mode only).
    pub l2_leaf: f64,
    pub seed: u64,
}

impl Default for GbmConfig {
    fn default() -> Self {
        GbmConfig {
            n_stages: 100,
            learning_rate: 0.1,
            max_depth: 6,
            min_samples_leaf: 1,
            loss: Loss::Squared,
            order: BoostOrder::First,
            row_subsample: 0.8,
            col_subsample: 0.8,
            l2_leaf: 1.0,
            seed: 0,
        }
    }
}

/// Second-order defaults mirroring common boosting tooling.
pub fn xgb_like_config(power: Option<f64>, seed: u64) -> GbmConfig {
    GbmConfig {
        order: BoostOrder::Second,
        loss: match power {
            Some(p) => Loss::Tweedie { power: p },
            None => Loss::Squared,
        },
        seed,
        ..Default::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    /// Initial constant score (raw scale for squared loss, log scale for
    /// Tweedie).
    pub f0: f64,
    pub stages: Vec<DecisionTree>,
    /// One weight per stage; the learning rate, kept explicit so the
    /// prediction identity f0 + sum(w_k * h_k) is checkable from storage.
    pub stage_weights: Vec<f64>,
    pub config: GbmConfig,
    /// Mean training loss after each stage.
    pub train_loss: Vec<f64>,
}

/// Clamp for per-leaf log-scale steps; keeps exp() well away from overflow.
const MAX_LOG_STEP: f64 = 10.0;

fn loss_value(loss: Loss, y: f64, f: f64) -> f64 {
    match loss {
        Loss::Squared => (y - f) * (y - f),
        Loss::Tweedie { power } => tweedie_loss(y, f, power),
    }
}

fn grad_hess(loss: Loss, y: f64, f: f64) -> (f64, f64) {
    match loss {
        Loss::Squared => (f - y, 1.0),
        Loss::Tweedie { power } => tweedie_grad_hess(y, f, power),
    }
}

pub fn fit_gbm(x: &Matrix, y: &[f64], config: &GbmConfig) -> Result<BoostedModel> {
    let n = y.len();
    let d = x.n_cols();
    assert_eq!(n, x.n_rows());
    if !(0.0 < config.learning_rate && config.learning_rate <= 1.0) {
        return Err(ToolError::Config(format!(
            "learning rate must lie in (0,1], got {}",
            config.learning_rate
        )));
    }
    let f0 = match config.loss {
        Loss::Squared => y.iter().sum::<f64>() / n as f64,
        Loss::Tweedie { power } => {
            if !(1.0 < power && power < 2.0) {
                return Err(ToolError::Config(format!(
                    "tweedie power must lie strictly inside (1,2), got {power}"
                )));
            }
            if y.iter().any(|&v| v < 0.0) {
                return Err(ToolError::Config("tweedie loss requires y >= 0".into()));
            }
            let mean = y.iter().sum::<f64>() / n as f64;
            if mean <= 0.0 {
                return Err(ToolError::Convergence(
                    "tweedie loss needs a positive target mean".into(),
                ));
            }
            mean.ln()
        }
    };

    let mut scores = vec![f0; n];
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let tree_cfg = TreeConfig {
        max_depth: config.max_depth,
        min_samples_leaf: config.min_samples_leaf,
    };

    let mut stages = Vec::with_capacity(config.n_stages);
    let mut stage_weights = Vec::with_capacity(config.n_stages);
    let mut train_loss = Vec::with_capacity(config.n_stages);

    for _ in 0..config.n_stages {
        let mut rng = ChaCha8Rng::seed_from_u64(master.next_u64());

        // Row/column subsampling is a second-order feature.
        let rows: Vec<usize> = if config.order == BoostOrder::Second && config.row_subsample < 1.0 {
            let m = ((config.row_subsample * n as f64).floor() as usize).clamp(1, n);
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            let mut picked = all[..m].to_vec();
            picked.sort_unstable();
            picked
        } else {
            (0..n).collect()
        };
        let cols: Vec<usize> = if config.order == BoostOrder::Second && config.col_subsample < 1.0 {
            let m = ((config.col_subsample * d as f64).ceil() as usize).clamp(1, d);
            let mut all: Vec<usize> = (0..d).collect();
            all.shuffle(&mut rng);
            let mut picked = all[..m].to_vec();
            picked.sort_unstable();
            picked
        } else {
            (0..d).collect()
        };

        let gh: Vec<(f64, f64)> = rows
            .iter()
            .map(|&i| grad_hess(config.loss, y[i], scores[i]))
            .collect();

        let sub_x = x.select_rows(&rows);
        let mut tree = match config.order {
            BoostOrder::First => {
                let targets: Vec<f64> = gh.iter().map(|(g, _)| -g).collect();
                let mut sampler = |_| cols.clone();
                let mut t = fit_tree_sampled(&sub_x, &targets, None, &tree_cfg, &mut sampler);
                line_search_leaves(&mut t, &sub_x, &rows, y, &scores, config.loss);
                t
            }
            BoostOrder::Second => {
                let targets: Vec<f64> = gh.iter().map(|(g, h)| -g / h.max(1e-12)).collect();
                let weights: Vec<f64> = gh.iter().map(|(_, h)| h.max(1e-12)).collect();
                let mut sampler = |_| cols.clone();
                let mut t =
                    fit_tree_sampled(&sub_x, &targets, Some(&weights), &tree_cfg, &mut sampler);
                newton_leaves(&mut t, &sub_x, &gh, config.l2_leaf);
                t
            }
        };
        // Remap is unnecessary (leaf values already set); keep thresholds as
        // fit on the subsample.
        let gamma = config.learning_rate;
        for (i, score) in scores.iter_mut().enumerate() {
            *score += gamma * tree.predict_row(x.row(i));
        }
        sanitize_leaves(&mut tree)?;

        let mean_loss =
            y.iter().zip(&scores).map(|(&yi, &fi)| loss_value(config.loss, yi, fi)).sum::<f64>()
                / n as f64;
        if !mean_loss.is_finite() {
            return Err(ToolError::Convergence(format!(
                "training loss became non-finite at stage {}",
                stages.len()
            )));
        }
        stages.push(tree);
        stage_weights.push(gamma);
        train_loss.push(mean_loss);
    }

    Ok(BoostedModel {
        f0,
        stages,
        stage_weights,
        config: *config,
        train_loss,
    })
}

/// Exact per-leaf step for the first-order mode. Squared loss keeps the
/// fitted residual means; Tweedie has the closed form
/// gamma = ln( sum y_i e^{(1-p)F_i} / sum e^{(2-p)F_i} ) over the leaf.
fn line_search_leaves(
    tree: &mut DecisionTree,
    sub_x: &Matrix,
    rows: &[usize],
    y: &[f64],
    scores: &[f64],
    loss: Loss,
) {
    let Loss::Tweedie { power: p } = loss else {
        return;
    };
    let mut num: Vec<f64> = vec![0.0; tree.nodes.len()];
    let mut den: Vec<f64> = vec![0.0; tree.nodes.len()];
    for (k, &i) in rows.iter().enumerate() {
        let leaf = tree.leaf_index(sub_x.row(k));
        num[leaf] += y[i] * ((1.0 - p) * scores[i]).exp();
        den[leaf] += ((2.0 - p) * scores[i]).exp();
    }
    for leaf in 0..tree.nodes.len() {
        if !matches!(tree.nodes[leaf], Node::Leaf { .. }) {
            continue;
        }
        let gamma = if den[leaf] > 0.0 && num[leaf] > 0.0 {
            (num[leaf] / den[leaf]).ln().clamp(-MAX_LOG_STEP, MAX_LOG_STEP)
        } else if den[leaf] > 0.0 {
            // All-zero leaf: push the mean hard toward zero.
            -MAX_LOG_STEP
        } else {
            0.0
        };
        tree.set_leaf_value(leaf, gamma);
    }
}

/// Second-order leaf values -G/(H + l2) from the subsample's statistics.
fn newton_leaves(tree: &mut DecisionTree, sub_x: &Matrix, gh: &[(f64, f64)], l2: f64) {
    let mut gsum = vec![0.0; tree.nodes.len()];
    let mut hsum = vec![0.0; tree.nodes.len()];
    for (k, &(g, h)) in gh.iter().enumerate() {
        let leaf = tree.leaf_index(sub_x.row(k));
        gsum[leaf] += g;
        hsum[leaf] += h;
    }
    for leaf in 0..tree.nodes.len() {
        if matches!(tree.nodes[leaf], Node::Leaf { .. }) {
            let v = (-gsum[leaf] / (hsum[leaf] + l2)).clamp(-MAX_LOG_STEP, MAX_LOG_STEP);
            tree.set_leaf_value(leaf, v);
        }
    }
}

fn sanitize_leaves(tree: &mut DecisionTree) -> Result<()> {
    for node in &tree.nodes {
        if let Node::Leaf { value } = node {
            if !value.is_finite() {
                return Err(ToolError::Convergence("stage produced a non-finite leaf".into()));
            }
        }
    }
    Ok(())
}

/// Raw boosting score f0 + sum_k w_k h_k(x).
pub fn score_gbm(m: &BoostedModel, x: &Matrix) -> Vec<f64> {
    x.rows()
        .map(|r| {
            m.f0 + m
                .stages
                .iter()
                .zip(&m.stage_weights)
                .map(|(tree, &w)| w * tree.predict_row(r))
                .sum::<f64>()
        })
        .collect()
}

/// Predictions on the target scale: raw score for squared loss,
/// mu = exp(score) > 0 for Tweedie.
pub fn predict_gbm(m: &BoostedModel, x: &Matrix) -> Result<Vec<f64>> {
    let scores = score_gbm(m, x);
    let out: Vec<f64> = match m.config.loss {
        Loss::Squared => scores,
        Loss::Tweedie { .. } => scores.iter().map(|s| s.exp()).collect(),
    };
    if out.iter().any(|v| !v.is_finite()) {
        return Err(ToolError::NonFinite("boosted prediction overflowed".into()));
    }
    Ok(out)
}
