//! Random forest: bootstrap-resampled trees and a majority vote.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, TreeConfig, TreeNode};
use crate::datasets::Dataset;
use crate::error::{invalid, Result};
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub tree: TreeConfig,
    /// Train every tree on the full dataset when false.
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            tree: TreeConfig::default(),
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub tree_seeds: Vec<u64>,
    pub class_count: usize,
}

impl ForestModel {
    pub fn votes(&self, x: &[f64]) -> Vec<usize> {
        let mut votes = vec![0; self.class_count];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        votes
    }

    /// Majority vote, ties to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let votes = self.votes(x);
        let mut best = 0;
        for (i, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = i;
            }
        }
        best
    }

    /// Vote fractions.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let n = self.trees.len() as f64;
        self.votes(x).into_iter().map(|v| v as f64 / n).collect()
    }
}

pub fn train_forest(ds: &Dataset, cfg: &ForestConfig, seed: u64) -> Result<ForestModel> {
    if cfg.n_trees == 0 {
        return Err(invalid("a forest needs at least one tree"));
    }
    if ds.is_empty() {
        return Err(invalid("cannot grow a forest on an empty dataset"));
    }
    if cfg.tree.min_leaf == 0 {
        return Err(invalid("min_leaf must be at least 1"));
    }
    let rows: Vec<&[f64]> = ds.samples().iter().map(|s| s.features.as_slice()).collect();
    let labels = ds.labels();
    let n = rows.len();
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut tree_seeds = Vec::with_capacity(cfg.n_trees);
    for t in 0..cfg.n_trees {
        let tree_seed = derive_seed(seed, &format!("tree/{t}"));
        let tree = if cfg.bootstrap {
            let mut rng = rng_from_seed(tree_seed);
            let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let r: Vec<&[f64]> = picks.iter().map(|&i| rows[i]).collect();
            let l: Vec<usize> = picks.iter().map(|&i| labels[i]).collect();
            grow(&r, &l, ds.class_count(), 0, &cfg.tree)
        } else {
            grow(&rows, &labels, ds.class_count(), 0, &cfg.tree)
        };
        trees.push(tree);
        tree_seeds.push(tree_seed);
    }
    Ok(ForestModel {
        trees,
        tree_seeds,
        class_count: ds.class_count(),
    })
}

pub fn predict_forest(model: &ForestModel, x: &[f64]) -> usize {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::tree::train_tree;
    use crate::datasets::{generate, DatasetKind};

    #[test]
    fn single_tree_without_bootstrap_matches_plain_tree() {
        let ds = generate(DatasetKind::CrescentMoon, 40, 0.2, 5).unwrap();
        let cfg = ForestConfig {
            n_trees: 1,
            bootstrap: false,
            ..ForestConfig::default()
        };
        let forest = train_forest(&ds, &cfg, 1).unwrap();
        let tree = train_tree(&ds, &cfg.tree).unwrap();
        assert_eq!(forest.trees[0], tree);
    }

    #[test]
    fn majority_with_low_tie_break() {
        let leaf = |c| TreeNode::Leaf {
            class: c,
            histogram: vec![1, 1],
        };
        let model = ForestModel {
            trees: vec![leaf(1), leaf(0), leaf(1), leaf(0), leaf(0)],
            tree_seeds: vec![0; 5],
            class_count: 2,
        };
        assert_eq!(model.votes(&[0.0]), vec![3, 2]);
        assert_eq!(model.predict(&[0.0]), 0);
        let tied = ForestModel {
            trees: vec![leaf(1), leaf(0)],
            tree_seeds: vec![0; 2],
            class_count: 2,
        };
        assert_eq!(tied.predict(&[0.0]), 0);
    }

    #[test]
    fn zero_trees_rejected() {
        let ds = generate(DatasetKind::Corners, 5, 0.1, 1).unwrap();
        let cfg = ForestConfig {
            n_trees: 0,
            ..ForestConfig::default()
        };
        assert!(train_forest(&ds, &cfg, 0).is_err());
    }
}
