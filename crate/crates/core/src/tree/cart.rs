//! CART regression trees grown best-first on squared-error reduction.

use serde::{Deserialize, Serialize};

use super::{midpoint, RegressionTree, TreeNode, TreeParams};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// How candidate splits are drawn at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitter {
    /// Every feature, every midpoint.
    Best,
    /// Every midpoint of `max_features` features drawn per node.
    RandomSubset { max_features: usize },
    /// One uniform threshold in the node's `[min, max)` range for each of
    /// `max_features` features drawn per node.
    ExtraRandom { max_features: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartParams {
    pub max_leaves: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub splitter: Splitter,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams {
            max_leaves: None,
            max_depth: None,
            min_samples_leaf: 1,
            splitter: Splitter::Best,
        }
    }
}

impl CartParams {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidParam("min_samples_leaf must be >= 1".into()));
        }
        if self.max_leaves == Some(0) {
            return Err(Error::InvalidParam("max_leaves must be >= 1".into()));
        }
        match self.splitter {
            Splitter::RandomSubset { max_features } | Splitter::ExtraRandom { max_features }
                if max_features == 0 || max_features > n_features =>
            {
                Err(Error::InvalidParam(format!(
                    "max_features must lie in [1, {n_features}], got {max_features}"
                )))
            }
            _ => Ok(()),
        }
    }

    fn snapshot(&self) -> TreeParams {
        TreeParams {
            max_leaves: self.max_leaves,
            max_depth: self.max_depth,
            min_samples_leaf: Some(self.min_samples_leaf),
            ..TreeParams::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Cut {
    feature: usize,
    threshold: f64,
    reduction: f64,
}

impl Cut {
    fn beats(&self, other: &Cut) -> bool {
        match self.reduction.total_cmp(&other.reduction) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => {
                self.feature < other.feature
                    || (self.feature == other.feature && self.threshold < other.threshold)
            }
        }
    }
}

fn keep(best: &mut Option<Cut>, c: Cut) {
    if c.reduction > 0.0 && best.as_ref().is_none_or(|b| c.beats(b)) {
        *best = Some(c);
    }
}

/// SSE reduction of splitting a node into parts with the given counts and sums.
#[inline]
fn reduction(n_l: usize, s_l: f64, n_r: usize, s_r: f64) -> f64 {
    let (nl, nr) = (n_l as f64, n_r as f64);
    let diff = s_l / nl - s_r / nr;
    nl * nr / (nl + nr) * diff * diff
}

fn scan_feature(
    feature: usize,
    col: &[f64],
    y: &[f64],
    rows: &[usize],
    min_leaf: usize,
    best: &mut Option<Cut>,
) {
    let mut order = rows.to_vec();
    order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
    let total: f64 = order.iter().map(|&i| y[i]).sum();
    let n = order.len();
    let mut s_l = 0.0;
    for w in 0..n.saturating_sub(1) {
        let i = order[w];
        s_l += y[i];
        let n_l = w + 1;
        let (x, next) = (col[i], col[order[w + 1]]);
        if x == next || n_l < min_leaf || n - n_l < min_leaf {
            continue;
        }
        keep(
            best,
            Cut {
                feature,
                threshold: midpoint(x, next),
                reduction: reduction(n_l, s_l, n - n_l, total - s_l),
            },
        );
    }
}

fn random_threshold_cut(
    feature: usize,
    col: &[f64],
    y: &[f64],
    rows: &[usize],
    min_leaf: usize,
    rng: &mut Rng,
    best: &mut Option<Cut>,
) {
    let (lo, hi) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(col[i]), hi.max(col[i]))
        });
    if !(lo < hi) {
        return;
    }
    let mut t = rng.uniform_in(lo, hi);
    if t >= hi {
        t = midpoint(lo, hi);
    }
    let (mut n_l, mut s_l, mut s) = (0usize, 0.0, 0.0);
    for &i in rows {
        s += y[i];
        if col[i] <= t {
            n_l += 1;
            s_l += y[i];
        }
    }
    let n_r = rows.len() - n_l;
    if n_l < min_leaf || n_r < min_leaf {
        return;
    }
    keep(
        best,
        Cut {
            feature,
            threshold: t,
            reduction: reduction(n_l, s_l, n_r, s - s_l),
        },
    );
}

fn find_cut(
    columns: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    params: &CartParams,
    rng: &mut Option<&mut Rng>,
) -> Option<Cut> {
    if rows.len() < 2 * params.min_samples_leaf {
        return None;
    }
    let mut best = None;
    match (params.splitter, rng.as_deref_mut()) {
        (Splitter::Best, _) | (_, None) => {
            for (j, col) in columns.iter().enumerate() {
                scan_feature(j, col, y, rows, params.min_samples_leaf, &mut best);
            }
        }
        (Splitter::RandomSubset { max_features }, Some(rng)) => {
            for j in rng.sample_without_replacement(columns.len(), max_features) {
                scan_feature(j, &columns[j], y, rows, params.min_samples_leaf, &mut best);
            }
        }
        (Splitter::ExtraRandom { max_features }, Some(rng)) => {
            for j in rng.sample_without_replacement(columns.len(), max_features) {
                random_threshold_cut(
                    j,
                    &columns[j],
                    y,
                    rows,
                    params.min_samples_leaf,
                    rng,
                    &mut best,
                );
            }
        }
    }
    best
}

enum Slot {
    Open {
        rows: Vec<usize>,
        depth: usize,
        cut: Option<Cut>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

fn assemble(slots: &mut [Option<Slot>], id: usize, y: &[f64]) -> TreeNode {
    match slots[id].take().expect("each slot visited once") {
        Slot::Open { rows, .. } => TreeNode::mean_leaf(rows.iter().map(|&i| y[i])),
        Slot::Split {
            feature,
            threshold,
            left,
            right,
        } => TreeNode::Internal {
            feature,
            threshold,
            left: Box::new(assemble(slots, left, y)),
            right: Box::new(assemble(slots, right, y)),
        },
    }
}

/// Grow a CART tree on `rows` (duplicates allowed, as in a bootstrap sample).
///
/// Leaves are split best-first by SSE reduction until `max_leaves` is reached
/// or no admissible split reduces the SSE. A random generator is required for
/// the randomized splitters; without one they fall back to [`Splitter::Best`].
pub fn fit_cart_on_rows(
    columns: &[Vec<f64>],
    y: &[f64],
    mut rows: Vec<usize>,
    params: &CartParams,
    mut rng: Option<&mut Rng>,
) -> Result<RegressionTree> {
    if rows.is_empty() {
        return Err(Error::Empty("cannot fit a tree on zero rows".into()));
    }
    params.validate(columns.len())?;
    rows.sort_unstable();
    let cut = find_cut(columns, y, &rows, params, &mut rng);
    let mut slots = vec![Some(Slot::Open {
        rows,
        depth: 0,
        cut,
    })];
    let mut leaves = 1usize;
    while params.max_leaves.is_none_or(|m| leaves < m) {
        let mut pick: Option<(usize, Cut)> = None;
        for (id, slot) in slots.iter().enumerate() {
            if let Some(Slot::Open {
                cut: Some(c),
                depth,
                ..
            }) = slot
            {
                if params.max_depth.is_some_and(|d| *depth >= d) {
                    continue;
                }
                if pick.as_ref().is_none_or(|(_, p)| c.reduction > p.reduction) {
                    pick = Some((id, *c));
                }
            }
        }
        let Some((id, c)) = pick else { break };
        let Some(Slot::Open { rows, depth, .. }) = slots[id].take() else {
            unreachable!()
        };
        let col = &columns[c.feature];
        let (l_rows, r_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| col[i] <= c.threshold);
        let l_cut = find_cut(columns, y, &l_rows, params, &mut rng);
        let r_cut = find_cut(columns, y, &r_rows, params, &mut rng);
        let (left, right) = (slots.len(), slots.len() + 1);
        slots.push(Some(Slot::Open {
            rows: l_rows,
            depth: depth + 1,
            cut: l_cut,
        }));
        slots.push(Some(Slot::Open {
            rows: r_rows,
            depth: depth + 1,
            cut: r_cut,
        }));
        slots[id] = Some(Slot::Split {
            feature: c.feature,
            threshold: c.threshold,
            left,
            right,
        });
        leaves += 1;
    }
    let root = assemble(&mut slots, 0, y);
    Ok(RegressionTree::new(root, columns.len(), params.snapshot()))
}

/// Exact greedy CART fit on the whole dataset.
pub fn fit_cart(
    ds: &Dataset,
    max_leaves: usize,
    min_samples_leaf: usize,
) -> Result<RegressionTree> {
    let params = CartParams {
        max_leaves: Some(max_leaves),
        min_samples_leaf,
        ..CartParams::default()
    };
    fit_cart_on_rows(
        &ds.columns(),
        ds.target(),
        (0..ds.n_rows()).collect(),
        &params,
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureSchema;

    #[test]
    fn worked_example() {
        let ds = Dataset::from_column(&[0.0, 1.0, 2.0, 3.0], &[1.0, 1.0, 5.0, 5.0]).unwrap();
        let t = fit_cart(&ds, 2, 1).unwrap();
        assert_eq!(t.num_leaves, 2);
        match &t.root {
            TreeNode::Internal {
                feature, threshold, ..
            } => assert_eq!((*feature, *threshold), (0, 1.5)),
            _ => panic!("expected a split"),
        }
        assert_eq!(t.leaf_values(), vec![1.0, 5.0]);
        assert_eq!(t.predict(&[0.5]).unwrap(), 1.0);
        assert_eq!(reduction(2, 2.0, 2, 10.0), 16.0);
    }

    #[test]
    fn constant_target_is_single_leaf() {
        let ds = Dataset::from_column(&[0.0, 1.0, 2.0, 3.0], &[2.5; 4]).unwrap();
        let t = fit_cart(&ds, 10, 1).unwrap();
        assert_eq!(t.num_leaves, 1);
        assert_eq!(t.predict(&[7.0]).unwrap(), 2.5);
    }

    #[test]
    fn one_leaf_is_mean() {
        let ds = Dataset::from_column(&[0.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 10.0]).unwrap();
        let t = fit_cart(&ds, 1, 1).unwrap();
        assert_eq!(t.leaf_values(), vec![4.0]);
        match t.root {
            TreeNode::Leaf {
                n,
                grad_sum,
                hess_sum,
                ..
            } => assert_eq!((n, grad_sum, hess_sum), (4, -16.0, 4.0)),
            _ => panic!(),
        }
    }

    #[test]
    fn min_samples_leaf_respected() {
        let ds = Dataset::from_column(&[0.0, 1.0, 2.0, 3.0, 4.0], &[0.0, 10.0, 10.0, 10.0, 10.0])
            .unwrap();
        let t = fit_cart(&ds, 8, 2).unwrap();
        t.root.visit_leaves(&mut |l| {
            if let TreeNode::Leaf { n, .. } = l {
                assert!(*n >= 2);
            }
        });
        assert!(fit_cart(&ds, 8, 0).is_err());
        assert!(fit_cart(&ds, 0, 1).is_err());
    }

    #[test]
    fn unlimited_growth_interpolates_distinct_points() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..30).map(|i| ((i * 7) % 11) as f64).collect();
        let ds = Dataset::from_column(&x, &y).unwrap();
        let params = CartParams::default();
        let t =
            fit_cart_on_rows(&ds.columns(), ds.target(), (0..30).collect(), &params, None).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(t.predict(&[*xi]).unwrap(), *yi);
        }
    }

    #[test]
    fn randomized_splitters_are_seeded() {
        let ds = crate::dataset::synth_generate(200, 4, 0.1).unwrap();
        let cols = ds.columns();
        for splitter in [
            Splitter::RandomSubset { max_features: 6 },
            Splitter::ExtraRandom { max_features: 6 },
        ] {
            let params = CartParams {
                splitter,
                ..CartParams::default()
            };
            let fit = |seed| {
                let mut rng = Rng::new(seed);
                fit_cart_on_rows(
                    &cols,
                    ds.target(),
                    (0..200).collect(),
                    &params,
                    Some(&mut rng),
                )
                .unwrap()
            };
            assert_eq!(fit(1), fit(1));
            assert_ne!(fit(1), fit(2));
        }
        let bad = CartParams {
            splitter: Splitter::RandomSubset { max_features: 0 },
            ..CartParams::default()
        };
        assert!(fit_cart_on_rows(&cols, ds.target(), vec![0, 1], &bad, None).is_err());
    }

    #[test]
    fn bootstrap_rows_with_duplicates() {
        let ds = Dataset::from_rows(
            FeatureSchema::generic(1),
            &[vec![0.0], vec![1.0], vec![2.0]],
            vec![0.0, 1.0, 2.0],
        )
        .unwrap();
        let t = fit_cart_on_rows(
            &ds.columns(),
            ds.target(),
            vec![2, 0, 0, 2],
            &CartParams::default(),
            None,
        )
        .unwrap();
        assert_eq!(t.predict(&[0.0]).unwrap(), 0.0);
        assert_eq!(t.predict(&[2.0]).unwrap(), 2.0);
    }
}
