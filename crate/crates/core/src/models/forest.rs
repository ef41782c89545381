use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::{DesignMatrix, Row};
use super::tree::{DecisionTree, TreeParams};
use crate::rng::child_rng;

/// Bootstrap ensemble of trees; the class-1 probability is the mean of the
/// trees' leaf fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<DecisionTree>,
}

impl Forest {
    pub fn from_trees(trees: Vec<DecisionTree>) -> Self {
        assert!(!trees.is_empty(), "a forest needs at least one tree");
        Forest { trees }
    }

    /// Each tree gets a bootstrap resample (multiplicities used as weights)
    /// and its own derived random stream.
    pub fn fit(x: &DesignMatrix, y: &[usize], n_trees: usize, params: TreeParams, seed: u64) -> Self {
        let n = x.n_rows();
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = child_rng(seed, t as u64);
                let mut weights = vec![0.0; n];
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1.0;
                }
                DecisionTree::fit(x, y, &weights, params, &mut rng)
            })
            .collect();
        Forest { trees }
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn p1(&self, x: Row<'_>) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}
