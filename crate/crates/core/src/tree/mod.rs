//! Binary regression trees.
//!
//! Routing is fixed everywhere: `x[feature] <= threshold` goes left, anything
//! greater goes right. Split thresholds are midpoints between consecutive
//! distinct feature values (or histogram cut points built the same way).
//!
//! Leaves record the sample count and the gradient/hessian sums of the rows
//! that reached them at fit time. For trees fit directly on a target with
//! squared error (CART) those are taken at a zero prediction, so
//! `grad_sum = -sum(y)`, `hess_sum = n`, and `value = -grad_sum / hess_sum`
//! is the region mean.

mod cart;
mod histogram;
mod prune;
mod split;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cart::{fit_cart, fit_cart_on_rows, CartParams, Splitter};
pub use histogram::{build_histogram, BinStats, FeatureBins, Histogram, DEFAULT_MAX_BINS};
pub use prune::{cost_complexity, leaf_sse, prune_ccp};
pub(crate) use split::{best_split_bins, reduce_in_order};
pub use split::{
    best_split_exact, best_split_histogram, best_split_histograms, GradStats, SplitCandidate,
    SplitParams,
};

/// Version tag written into serialized trees.
pub const TREE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
        n: usize,
        grad_sum: f64,
        hess_sum: f64,
    },
}

impl TreeNode {
    pub fn leaf(value: f64, n: usize, grad_sum: f64, hess_sum: f64) -> Self {
        TreeNode::Leaf {
            value,
            n,
            grad_sum,
            hess_sum,
        }
    }

    /// Leaf holding the mean of `ys` with squared-error sums taken at zero.
    pub fn mean_leaf(ys: impl IntoIterator<Item = f64>) -> Self {
        let (mut n, mut sum) = (0usize, 0.0);
        for y in ys {
            n += 1;
            sum += y;
        }
        let value = if n == 0 { 0.0 } else { sum / n as f64 };
        TreeNode::leaf(value, n, -sum, n as f64)
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn count_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.count_leaves() + right.count_leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// The leaf `x` routes to.
    pub fn route(&self, x: &[f64]) -> &TreeNode {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { .. } => return node,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Internal {
                feature,
                left,
                right,
                ..
            } => Some(
                (*feature)
                    .max(left.max_feature().unwrap_or(0))
                    .max(right.max_feature().unwrap_or(0)),
            ),
        }
    }

    /// Leaf values in left-to-right order.
    pub fn leaf_values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_leaves(&mut |l| {
            if let TreeNode::Leaf { value, .. } = l {
                out.push(*value);
            }
        });
        out
    }

    pub fn visit_leaves<'a>(&'a self, f: &mut impl FnMut(&'a TreeNode)) {
        match self {
            TreeNode::Leaf { .. } => f(self),
            TreeNode::Internal { left, right, .. } => {
                left.visit_leaves(f);
                right.visit_leaves(f);
            }
        }
    }

    /// True when `self` can be obtained from `other` by collapsing internal
    /// nodes into leaves.
    pub fn is_pruning_of(&self, other: &TreeNode) -> bool {
        match (self, other) {
            (TreeNode::Leaf { .. }, _) => true,
            (
                TreeNode::Internal {
                    feature: fa,
                    threshold: ta,
                    left: la,
                    right: ra,
                },
                TreeNode::Internal {
                    feature: fb,
                    threshold: tb,
                    left: lb,
                    right: rb,
                },
            ) => {
                fa == fb
                    && ta.to_bits() == tb.to_bits()
                    && la.is_pruning_of(lb)
                    && ra.is_pruning_of(rb)
            }
            _ => false,
        }
    }
}

/// Fit-time settings recorded alongside a tree.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TreeParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_leaves: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_samples_leaf: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2_reg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_split_gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_child_hess: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ccp_alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub format_version: u32,
    pub root: TreeNode,
    pub num_leaves: usize,
    /// Number of features the tree was fit on.
    pub n_features: usize,
    pub params: TreeParams,
}

impl RegressionTree {
    pub fn new(root: TreeNode, n_features: usize, params: TreeParams) -> Self {
        let num_leaves = root.count_leaves();
        RegressionTree {
            format_version: TREE_FORMAT_VERSION,
            root,
            num_leaves,
            n_features,
            params,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Error::check_len(self.n_features, x.len())?;
        Ok(self.predict_unchecked(x))
    }

    #[inline]
    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        match self.root.route(x) {
            TreeNode::Leaf { value, .. } => *value,
            TreeNode::Internal { .. } => unreachable!("route ends at a leaf"),
        }
    }

    pub fn leaf_values(&self) -> Vec<f64> {
        self.root.leaf_values()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Structural checks after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != TREE_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "tree format version {} not supported (expected {TREE_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.num_leaves != self.root.count_leaves() {
            return Err(Error::Format(format!(
                "num_leaves {} disagrees with {} leaves in the tree",
                self.num_leaves,
                self.root.count_leaves()
            )));
        }
        if let Some(f) = self.root.max_feature() {
            if f >= self.n_features {
                return Err(Error::Format(format!(
                    "split on feature {f} but tree has {} features",
                    self.n_features
                )));
            }
        }
        Ok(())
    }
}

/// Midpoint of `a < b` that still sorts strictly below `b`.
#[inline]
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) * 0.5;
    if m >= b {
        a
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump() -> RegressionTree {
        RegressionTree::new(
            TreeNode::Internal {
                feature: 0,
                threshold: 1.5,
                left: Box::new(TreeNode::leaf(1.0, 2, -2.0, 2.0)),
                right: Box::new(TreeNode::leaf(5.0, 2, -10.0, 2.0)),
            },
            1,
            TreeParams::default(),
        )
    }

    #[test]
    fn single_leaf_predicts_constant() {
        let t = RegressionTree::new(TreeNode::leaf(3.25, 4, 0.0, 4.0), 2, TreeParams::default());
        assert_eq!(t.predict(&[100.0, -7.0]).unwrap(), 3.25);
        assert_eq!(t.num_leaves, 1);
    }

    #[test]
    fn routing_boundary_goes_left() {
        let t = stump();
        assert_eq!(t.predict(&[0.5]).unwrap(), 1.0);
        assert_eq!(t.predict(&[1.5]).unwrap(), 1.0);
        assert_eq!(t.predict(&[1.5000001]).unwrap(), 5.0);
        assert!(t.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn json_layout() {
        let t = stump();
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json["root"]["feature"], 0);
        assert_eq!(json["root"]["left"]["value"], 1.0);
        assert_eq!(json["root"]["right"]["grad_sum"], -10.0);
        let back: RegressionTree = serde_json::from_value(json).unwrap();
        back.validate().unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn validate_rejects_bad_trees() {
        let mut t = stump();
        t.num_leaves = 3;
        assert!(t.validate().is_err());
        let mut t = stump();
        t.n_features = 0;
        assert!(t.validate().is_err());
        let mut t = stump();
        t.format_version = 99;
        assert!(t.validate().is_err());
    }

    #[test]
    fn midpoint_stays_below_upper() {
        assert_eq!(midpoint(1.0, 2.0), 1.5);
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        assert!(midpoint(a, b) < b);
    }
}
