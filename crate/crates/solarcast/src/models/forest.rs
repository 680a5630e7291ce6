//! Random forest regressor: seeded bootstrap sampling, per-split feature
//! subsampling, and unweighted prediction averaging over the trees.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::models::tree::{fit_tree_sampled, DecisionTree, TreeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Fraction of features considered at each split.
    pub feature_fraction: f64,
    /// Draw n rows with replacement per tree; disable to fit each tree on
    /// the full sample.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 12,
            min_samples_leaf: 2,
            feature_fraction: 0.7,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub tree_seeds: Vec<u64>,
    pub config: ForestConfig,
}

pub fn fit_forest(x: &Matrix, y: &[f64], config: &ForestConfig) -> ForestModel {
    assert!(config.n_trees >= 1);
    let n = y.len();
    let d = x.n_cols();
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let tree_seeds: Vec<u64> = (0..config.n_trees).map(|_| master.next_u64()).collect();

    let tree_cfg = TreeConfig {
        max_depth: config.max_depth,
        min_samples_leaf: config.min_samples_leaf,
    };
    let k = ((config.feature_fraction * d as f64).ceil() as usize).clamp(1, d);

    let trees = tree_seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (bx, by): (Matrix, Vec<f64>) = if config.bootstrap {
                let idx: Vec<usize> = (0..n).map(|_| (rng.next_u64() % n as u64) as usize).collect();
                (x.select_rows(&idx), idx.iter().map(|&i| y[i]).collect())
            } else {
                (x.clone(), y.to_vec())
            };
            let mut sampler = |n_features: usize| -> Vec<usize> {
                if k >= n_features {
                    (0..n_features).collect()
                } else {
                    let mut all: Vec<usize> = (0..n_features).collect();
                    all.shuffle(&mut rng);
                    let mut picked: Vec<usize> = all[..k].to_vec();
                    picked.sort_unstable();
                    picked
                }
            };
            fit_tree_sampled(&bx, &by, None, &tree_cfg, &mut sampler)
        })
        .collect();

    ForestModel {
        trees,
        tree_seeds,
        config: *config,
    }
}

/// Prediction is the arithmetic mean of the member trees.
pub fn predict_forest(m: &ForestModel, x: &Matrix) -> Vec<f64> {
    let n = x.n_rows();
    let mut out = vec![0.0; n];
    for tree in &m.trees {
        for (o, r) in out.iter_mut().zip(x.rows()) {
            *o += tree.predict_row(r);
        }
    }
    let count = m.trees.len() as f64;
    for o in &mut out {
        *o /= count;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tree::fit_tree;
    use rand::Rng;

    fn noisy_linear(n: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 2.0 * r[0] - r[1] + 0.5 * r[2] + rng.gen_range(-0.5..0.5))
            .collect();
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn single_tree_without_randomness_reduces_to_fit_tree() {
        let (x, y) = noisy_linear(60, 1);
        let cfg = ForestConfig {
            n_trees: 1,
            max_depth: 4,
            min_samples_leaf: 1,
            feature_fraction: 1.0,
            bootstrap: false,
            seed: 5,
        };
        let forest = fit_forest(&x, &y, &cfg);
        let tree = fit_tree(
            &x,
            &y,
            None,
            &TreeConfig { max_depth: 4, min_samples_leaf: 1 },
        );
        assert_eq!(predict_forest(&forest, &x), tree.predict(&x));
    }

    #[test]
    fn same_seed_gives_identical_predictions() {
        let (x, y) = noisy_linear(80, 2);
        let cfg = ForestConfig { n_trees: 10, seed: 77, ..Default::default() };
        let a = fit_forest(&x, &y, &cfg);
        let b = fit_forest(&x, &y, &cfg);
        assert_eq!(predict_forest(&a, &x), predict_forest(&b, &x));
    }

    #[test]
    fn forest_prediction_is_exactly_the_tree_mean() {
        let (x, y) = noisy_linear(50, 3);
        let cfg = ForestConfig { n_trees: 7, seed: 9, ..Default::default() };
        let m = fit_forest(&x, &y, &cfg);
        let pred = predict_forest(&m, &x);
        for (i, row) in x.rows().enumerate() {
            let mean: f64 =
                m.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / m.trees.len() as f64;
            assert_eq!(pred[i], mean);
        }
    }

    #[test]
    fn forest_beats_a_single_tree_on_noisy_data() {
        let (xtr, ytr) = noisy_linear(300, 4);
        let (xte, yte) = noisy_linear(200, 5);
        let mse = |pred: &[f64]| -> f64 {
            pred.iter().zip(&yte).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / yte.len() as f64
        };
        let tree = fit_tree(
            &xtr,
            &ytr,
            None,
            &TreeConfig { max_depth: 12, min_samples_leaf: 1 },
        );
        let forest = fit_forest(
            &xtr,
            &ytr,
            &ForestConfig { n_trees: 500, max_depth: 12, min_samples_leaf: 1, seed: 6, ..Default::default() },
        );
        assert!(mse(&predict_forest(&forest, &xte)) <= mse(&tree.predict(&xte)));
    }
}
