use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::DecisionTree;
use super::{ForestParams, TreeParams};
use crate::dataset::Class;
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    /// Seed each tree was grown with, derived from the training seed.
    pub tree_seeds: Vec<u64>,
}

impl RandomForest {
    pub(crate) fn fit(
        x: &Matrix,
        y: &[Class],
        class_weights: [f64; 2],
        tree: &TreeParams,
        params: &ForestParams,
        seed: u64,
    ) -> Self {
        let tree_seeds: Vec<u64> = (0..params.n_trees as u64).map(|t| rng::derive_seed(seed, t)).collect();
        // per-tree seeds make the result independent of rayon scheduling
        let trees = tree_seeds
            .par_iter()
            .map(|&s| {
                let mut r = rng::seeded(s);
                let counts = params.bootstrap.then(|| {
                    let n = x.rows();
                    let mut counts = vec![0u32; n];
                    for _ in 0..n {
                        counts[r.gen_range(0..n)] += 1;
                    }
                    counts
                });
                let split_seed = rng::derive_seed(s, u64::MAX);
                DecisionTree::fit(x, y, class_weights, tree, params.max_features, counts.as_deref(), split_seed)
            })
            .collect();
        Self { trees, tree_seeds }
    }

    pub fn score_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.score_row(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn proba_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.proba_row(row)).sum::<f64>() / self.trees.len() as f64
    }
}
