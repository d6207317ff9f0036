//! Minimal cost-complexity pruning.
//!
//! For `alpha >= 0` the cost of a tree is `sum over leaves of SSE + alpha * leaves`,
//! with each leaf's SSE taken around the mean of the rows routed to it.
//! [`prune_ccp`] repeatedly collapses the weakest link, the internal node with
//! the smallest per-leaf cost `(SSE(node) - SSE(subtree)) / (leaves - 1)`,
//! while that cost is below `alpha`. Ties go to the shallowest node, then the
//! lowest split feature.

use super::{RegressionTree, TreeNode};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

struct Node {
    split: Option<(usize, f64, usize, usize)>,
    parent: Option<usize>,
    depth: usize,
    n: usize,
    sum: f64,
    sse: f64,
    collapsed: bool,
}

fn flatten(
    node: &TreeNode,
    parent: Option<usize>,
    depth: usize,
    out: &mut Vec<Node>,
    leaves: &mut Vec<Option<TreeNode>>,
) -> usize {
    let id = out.len();
    out.push(Node {
        split: None,
        parent,
        depth,
        n: 0,
        sum: 0.0,
        sse: 0.0,
        collapsed: false,
    });
    leaves.push(None);
    match node {
        TreeNode::Leaf { .. } => leaves[id] = Some(node.clone()),
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            let l = flatten(left, Some(id), depth + 1, out, leaves);
            let r = flatten(right, Some(id), depth + 1, out, leaves);
            out[id].split = Some((*feature, *threshold, l, r));
        }
    }
    id
}

fn path(nodes: &[Node], x: &[f64]) -> Vec<usize> {
    let mut ids = vec![0];
    while let Some((f, t, l, r)) = nodes[*ids.last().unwrap()].split {
        ids.push(if x[f] <= t { l } else { r });
    }
    ids
}

fn route_stats(tree: &RegressionTree, ds: &Dataset) -> Result<(Vec<Node>, Vec<Option<TreeNode>>)> {
    Error::check_len(tree.n_features, ds.n_features())?;
    let mut nodes = Vec::new();
    let mut leaves = Vec::new();
    flatten(&tree.root, None, 0, &mut nodes, &mut leaves);
    for (row, &y) in ds.rows().zip(ds.target()) {
        for id in path(&nodes, row) {
            nodes[id].n += 1;
            nodes[id].sum += y;
        }
    }
    if let Some(id) = nodes.iter().position(|nd| nd.n == 0) {
        return Err(Error::TreeMismatch(format!(
            "no dataset row reaches node {id} (depth {})",
            nodes[id].depth
        )));
    }
    for (row, &y) in ds.rows().zip(ds.target()) {
        for id in path(&nodes, row) {
            let mean = nodes[id].sum / nodes[id].n as f64;
            nodes[id].sse += (y - mean) * (y - mean);
        }
    }
    Ok((nodes, leaves))
}

/// (SSE of the active subtree's leaves, active leaf count) below `id`.
fn subtree_cost(nodes: &[Node], id: usize) -> (f64, usize) {
    match nodes[id].split {
        Some((_, _, l, r)) if !nodes[id].collapsed => {
            let (sl, nl) = subtree_cost(nodes, l);
            let (sr, nr) = subtree_cost(nodes, r);
            (sl + sr, nl + nr)
        }
        _ => (nodes[id].sse, 1),
    }
}

fn rebuild(nodes: &[Node], leaves: &[Option<TreeNode>], id: usize) -> TreeNode {
    let nd = &nodes[id];
    match nd.split {
        Some((feature, threshold, l, r)) if !nd.collapsed => TreeNode::Internal {
            feature,
            threshold,
            left: Box::new(rebuild(nodes, leaves, l)),
            right: Box::new(rebuild(nodes, leaves, r)),
        },
        Some(_) => TreeNode::leaf(nd.sum / nd.n as f64, nd.n, -nd.sum, nd.n as f64),
        None => leaves[id].clone().expect("leaf slot filled"),
    }
}

/// No ancestor of `id` has been collapsed.
fn is_active(nodes: &[Node], id: usize) -> bool {
    let mut cur = nodes[id].parent;
    while let Some(p) = cur {
        if nodes[p].collapsed {
            return false;
        }
        cur = nodes[p].parent;
    }
    true
}

/// Weakest-link pruning of `tree` against the rows of `ds`.
pub fn prune_ccp(tree: &RegressionTree, ds: &Dataset, alpha: f64) -> Result<RegressionTree> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }
    let (mut nodes, leaves) = route_stats(tree, ds)?;
    loop {
        let mut weakest: Option<(f64, usize, usize, usize)> = None;
        for id in 0..nodes.len() {
            let Some((feature, ..)) = nodes[id].split else {
                continue;
            };
            if nodes[id].collapsed || !is_active(&nodes, id) {
                continue;
            }
            let (sub_sse, sub_leaves) = subtree_cost(&nodes, id);
            let g = (nodes[id].sse - sub_sse) / (sub_leaves - 1) as f64;
            let key = (g, nodes[id].depth, feature, id);
            let better = match weakest {
                None => true,
                Some(w) => key.0 < w.0 || (key.0 == w.0 && (key.1, key.2, key.3) < (w.1, w.2, w.3)),
            };
            if better {
                weakest = Some(key);
            }
        }
        match weakest {
            Some((g, _, _, id)) if g < alpha => nodes[id].collapsed = true,
            _ => break,
        }
    }
    let root = rebuild(&nodes, &leaves, 0);
    let mut params = tree.params.clone();
    params.ccp_alpha = Some(alpha);
    Ok(RegressionTree::new(root, tree.n_features, params))
}

/// Per-leaf SSE of `ds` around each leaf's routed mean, left to right.
pub fn leaf_sse(tree: &RegressionTree, ds: &Dataset) -> Result<Vec<f64>> {
    let (nodes, _) = route_stats(tree, ds)?;
    Ok(nodes
        .iter()
        .filter(|nd| nd.split.is_none())
        .map(|nd| nd.sse)
        .collect())
}

/// `sum of leaf SSE + alpha * leaves` for `tree` on `ds`.
pub fn cost_complexity(tree: &RegressionTree, ds: &Dataset, alpha: f64) -> Result<f64> {
    let sse = leaf_sse(tree, ds)?;
    Ok(sse.iter().sum::<f64>() + alpha * sse.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, FeatureSchema};
    use crate::rng::Rng;
    use crate::tree::fit_cart;

    fn random_ds(rng: &mut Rng, n: usize, d: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| (rng.uniform() * 20.0).round()).collect())
            .collect();
        let y = (0..n).map(|_| rng.uniform_in(-5.0, 5.0)).collect();
        Dataset::from_rows(FeatureSchema::generic(d), &rows, y).unwrap()
    }

    /// Every tree reachable from `node` by collapsing internal nodes.
    fn prunings(node: &TreeNode) -> Vec<TreeNode> {
        let leaf = TreeNode::leaf(0.0, 0, 0.0, 0.0);
        match node {
            TreeNode::Leaf { .. } => vec![leaf],
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                let mut out = vec![leaf];
                for l in prunings(left) {
                    for r in prunings(right) {
                        out.push(TreeNode::Internal {
                            feature: *feature,
                            threshold: *threshold,
                            left: Box::new(l.clone()),
                            right: Box::new(r),
                        });
                    }
                }
                out
            }
        }
    }

    #[test]
    fn alpha_zero_keeps_tree() {
        let mut rng = Rng::new(8);
        for _ in 0..20 {
            let ds = random_ds(&mut rng, 40, 3);
            let t = fit_cart(&ds, 12, 1).unwrap();
            let p = prune_ccp(&t, &ds, 0.0).unwrap();
            assert_eq!(p.num_leaves, t.num_leaves);
        }
    }

    #[test]
    fn huge_alpha_collapses_to_root() {
        let mut rng = Rng::new(9);
        let ds = random_ds(&mut rng, 50, 2);
        let t = fit_cart(&ds, 10, 1).unwrap();
        let root_sse = {
            let y = ds.target();
            let m = y.iter().sum::<f64>() / y.len() as f64;
            y.iter().map(|v| (v - m).powi(2)).sum::<f64>()
        };
        let p = prune_ccp(&t, &ds, root_sse + 1.0).unwrap();
        assert_eq!(p.num_leaves, 1);
        let mean = ds.target().iter().sum::<f64>() / 50.0;
        assert!((p.leaf_values()[0] - mean).abs() < 1e-12);
    }

    #[test]
    fn minimizes_cost_over_all_prunings_and_is_nested() {
        let mut rng = Rng::new(10);
        for trial in 0..60 {
            let ds = random_ds(&mut rng, 30 + trial % 20, 1 + trial % 3);
            let t = fit_cart(&ds, 2 + trial % 6, 1).unwrap();
            assert!(t.num_leaves <= 7);
            let all = prunings(&t.root);
            let mut previous: Option<TreeNode> = None;
            for alpha in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 1e6] {
                let p = prune_ccp(&t, &ds, alpha).unwrap();
                let best = all
                    .iter()
                    .map(|s| {
                        let st = RegressionTree::new(s.clone(), t.n_features, Default::default());
                        cost_complexity(&st, &ds, alpha).unwrap()
                    })
                    .fold(f64::INFINITY, f64::min);
                let got = cost_complexity(&p, &ds, alpha).unwrap();
                assert!(got <= best + 1e-9, "alpha {alpha}: {got} > {best}");
                assert!(p.root.is_pruning_of(&t.root));
                if let Some(prev) = &previous {
                    assert!(
                        p.root.is_pruning_of(prev),
                        "sequence not nested at alpha {alpha}"
                    );
                }
                previous = Some(p.root.clone());
            }
        }
    }

    #[test]
    fn mismatch_is_an_error() {
        let ds = Dataset::from_column(&[0.0, 1.0, 2.0, 3.0], &[1.0, 1.0, 5.0, 5.0]).unwrap();
        let t = fit_cart(&ds, 2, 1).unwrap();
        let left_only = Dataset::from_column(&[0.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!(matches!(
            prune_ccp(&t, &left_only, 0.0),
            Err(Error::TreeMismatch(_))
        ));
        let wide =
            Dataset::from_rows(FeatureSchema::generic(2), &[vec![0.0, 0.0]], vec![0.0]).unwrap();
        assert!(prune_ccp(&t, &wide, 0.0).is_err());
        assert!(prune_ccp(&t, &ds, -1.0).is_err());
    }
}
