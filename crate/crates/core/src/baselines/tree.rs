//! Binary decision tree grown greedily on information gain.

use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        feature: usize,
        /// Samples with `x[feature] < threshold` go left.
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        class: usize,
        histogram: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    /// `None` grows until the leaves are pure.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_leaf: 1,
        }
    }
}

impl TreeNode {
    pub fn leaf(&self, x: &[f64]) -> &TreeNode {
        let mut node = self;
        while let TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } = node
        {
            node = if x[*feature] < *threshold { left } else { right };
        }
        node
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        match self.leaf(x) {
            TreeNode::Leaf { class, .. } => *class,
            TreeNode::Internal { .. } => unreachable!("leaf() stops at leaves"),
        }
    }

    /// Class frequencies of the leaf reached by `x`.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        match self.leaf(x) {
            TreeNode::Leaf { histogram, .. } => {
                let total: usize = histogram.iter().sum();
                histogram.iter().map(|&c| c as f64 / total as f64).collect()
            }
            TreeNode::Internal { .. } => unreachable!("leaf() stops at leaves"),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }
}

/// Shannon entropy in bits of a class histogram.
pub fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn histogram(labels: impl Iterator<Item = usize>, k: usize) -> Vec<usize> {
    let mut h = vec![0; k];
    for l in labels {
        h[l] += 1;
    }
    h
}

fn majority(h: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in h.iter().enumerate() {
        if c > h[best] {
            best = i;
        }
    }
    best
}

/// Best `(feature, threshold, gain)` over midpoints of sorted distinct
/// values; ties keep the lower feature index, then the lower threshold.
/// Both children must hold at least `min_leaf` rows.
pub(crate) fn best_split(rows: &[&[f64]], labels: &[usize], k: usize, min_leaf: usize) -> Option<(usize, f64, f64)> {
    let n = rows.len();
    let parent = histogram(labels.iter().copied(), k);
    let parent_h = entropy(&parent);
    let n_f = rows.first()?.len();
    let mut best: Option<(usize, f64, f64)> = None;
    let mut order: Vec<usize> = (0..n).collect();
    for f in 0..n_f {
        order.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]));
        let mut left = vec![0usize; k];
        let mut right = parent.clone();
        for pos in 0..n - 1 {
            let i = order[pos];
            left[labels[i]] += 1;
            right[labels[i]] -= 1;
            let (v, next) = (rows[i][f], rows[order[pos + 1]][f]);
            if v == next {
                continue;
            }
            let n_left = pos + 1;
            if n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let threshold = 0.5 * (v + next);
            let children = (n_left as f64 * entropy(&left) + (n - n_left) as f64 * entropy(&right)) / n as f64;
            let gain = parent_h - children;
            if best.is_none_or(|(_, _, g)| gain > g) {
                best = Some((f, threshold, gain));
            }
        }
    }
    best
}

/// Grow a tree. Splitting stops when a node is pure, `max_depth` is
/// reached, or no split leaves `min_leaf` rows on both sides. Impure nodes
/// split even at zero gain so that unlimited trees fit any conflict-free
/// training set.
pub fn train_tree(ds: &Dataset, cfg: &TreeConfig) -> Result<TreeNode> {
    if ds.is_empty() {
        return Err(invalid("cannot grow a tree on an empty dataset"));
    }
    if cfg.min_leaf == 0 {
        return Err(invalid("min_leaf must be at least 1"));
    }
    let rows: Vec<&[f64]> = ds.samples().iter().map(|s| s.features.as_slice()).collect();
    let labels = ds.labels();
    Ok(grow(&rows, &labels, ds.class_count(), 0, cfg))
}

pub(crate) fn grow(rows: &[&[f64]], labels: &[usize], k: usize, depth: usize, cfg: &TreeConfig) -> TreeNode {
    let hist = histogram(labels.iter().copied(), k);
    let pure = hist.iter().filter(|&&c| c > 0).count() <= 1;
    let at_depth = cfg.max_depth.is_some_and(|d| depth >= d);
    let split = if pure || at_depth {
        None
    } else {
        best_split(rows, labels, k, cfg.min_leaf)
    };
    let Some((feature, threshold, _)) = split else {
        return TreeNode::Leaf {
            class: majority(&hist),
            histogram: hist,
        };
    };
    let (mut lr, mut ll, mut rr, mut rl) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (row, &label) in rows.iter().zip(labels) {
        if row[feature] < threshold {
            lr.push(*row);
            ll.push(label);
        } else {
            rr.push(*row);
            rl.push(label);
        }
    }
    TreeNode::Internal {
        feature,
        threshold,
        left: Box::new(grow(&lr, &ll, k, depth + 1, cfg)),
        right: Box::new(grow(&rr, &rl, k, depth + 1, cfg)),
    }
}
