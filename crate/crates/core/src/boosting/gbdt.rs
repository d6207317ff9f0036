//! Histogram GBDT with second-order leaf weights and leaf-wise growth.
//!
//! Each round computes squared-loss gradients `g = y_hat - y` and hessians
//! `h = 1` at the current predictions, optionally keeps a GOSS subsample with
//! its weights folded into `g` and `h`, and grows one tree on per-feature
//! histograms of the (weighted) sums. Bin cut points are computed once from
//! the full training set before the first round.
//!
//! Leaf-wise growth repeatedly splits the open leaf whose best split has the
//! largest gain, stopping at `num_leaves` or when no split has positive gain
//! (the gain already has `min_split_gain` subtracted). Leaves get the weight
//! `-G / (H + l2_reg)`, and the tree is added with shrinkage `learning_rate`.

use serde::{Deserialize, Serialize};

use super::ensemble::{BoostingParams, Ensemble};
use super::goss::{goss_sample, GossParams};
use super::objective::leaf_weight;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::par;
use crate::rng::derive_seed;
use crate::tree::{
    best_split_bins, reduce_in_order, FeatureBins, GradStats, Histogram, RegressionTree,
    SplitCandidate, SplitParams, TreeNode, TreeParams, DEFAULT_MAX_BINS,
};

/// Per-sample first and second derivatives of the loss.
#[derive(Debug, Clone, PartialEq)]
pub struct GradHess {
    pub grads: Vec<f64>,
    pub hessians: Vec<f64>,
}

/// Derivatives of `1/2 (y - y_hat)^2` with respect to `y_hat`.
pub fn squared_loss_grad_hess(y: &[f64], y_hat: &[f64]) -> Result<GradHess> {
    Error::check_len(y.len(), y_hat.len())?;
    let grads: Vec<f64> = y.iter().zip(y_hat).map(|(a, p)| p - a).collect();
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient at row {i}")));
    }
    Ok(GradHess {
        hessians: vec![1.0; grads.len()],
        grads,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthStrategy {
    #[default]
    LeafWise,
    DepthWise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub num_rounds: usize,
    pub learning_rate: f64,
    pub num_leaves: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    pub l2_reg: f64,
    pub min_split_gain: f64,
    pub max_bins: usize,
    pub min_child_hess: f64,
    /// Fewest training rows (sampled rows under GOSS) in any leaf.
    pub min_data_in_leaf: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goss: Option<GossParams>,
    #[serde(default)]
    pub growth: GrowthStrategy,
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            num_rounds: 100,
            learning_rate: 0.1,
            num_leaves: 31,
            max_depth: None,
            l2_reg: 0.0,
            min_split_gain: 0.0,
            max_bins: DEFAULT_MAX_BINS,
            min_child_hess: 1e-3,
            min_data_in_leaf: 20,
            goss: None,
            growth: GrowthStrategy::LeafWise,
            seed: 0,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParam(m));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!(
                "learning_rate must lie in (0, 1], got {}",
                self.learning_rate
            ));
        }
        if self.num_rounds == 0 {
            return bad("num_rounds must be >= 1".into());
        }
        if self.num_leaves < 2 {
            return bad(format!("num_leaves must be >= 2, got {}", self.num_leaves));
        }
        if self.max_depth == Some(0) {
            return bad("max_depth must be >= 1 when set".into());
        }
        if !(self.l2_reg >= 0.0 && self.l2_reg.is_finite()) {
            return bad(format!(
                "l2_reg must be finite and >= 0, got {}",
                self.l2_reg
            ));
        }
        if !(self.min_split_gain >= 0.0 && self.min_split_gain.is_finite()) {
            return bad(format!(
                "min_split_gain must be finite and >= 0, got {}",
                self.min_split_gain
            ));
        }
        if !(self.min_child_hess >= 0.0 && self.min_child_hess.is_finite()) {
            return bad(format!(
                "min_child_hess must be finite and >= 0, got {}",
                self.min_child_hess
            ));
        }
        if self.min_data_in_leaf == 0 {
            return bad("min_data_in_leaf must be >= 1".into());
        }
        if !(2..=65536).contains(&self.max_bins) {
            return bad(format!(
                "max_bins must lie in [2, 65536], got {}",
                self.max_bins
            ));
        }
        if let Some(g) = &self.goss {
            g.validate()?;
        }
        Ok(())
    }

    fn split_params(&self) -> SplitParams {
        SplitParams {
            l2_reg: self.l2_reg,
            min_split_gain: self.min_split_gain,
            min_child_hess: self.min_child_hess,
            min_child_samples: self.min_data_in_leaf,
        }
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_leaves: Some(self.num_leaves),
            max_depth: self.max_depth,
            l2_reg: Some(self.l2_reg),
            min_split_gain: Some(self.min_split_gain),
            min_child_hess: Some(self.min_child_hess),
            min_samples_leaf: Some(self.min_data_in_leaf),
            max_bins: Some(self.max_bins),
            ..TreeParams::default()
        }
    }
}

/// One split taken while growing a tree.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitEvent {
    pub round: usize,
    /// Creation index of the split leaf within its tree.
    pub leaf: usize,
    pub depth: usize,
    pub parent: GradStats,
    pub split: SplitCandidate,
    /// Best gains of every other leaf that could have been split instead.
    pub competing_gains: Vec<f64>,
}

/// Feature cut points and per-row bin codes, fixed for the whole fit.
pub(crate) struct Binned {
    cuts: Vec<Vec<f64>>,
    codes: Vec<Vec<u16>>,
}

impl Binned {
    pub(crate) fn new(columns: &[Vec<f64>], max_bins: usize) -> Self {
        let per: Vec<(Vec<f64>, Vec<u16>)> = par::map_slice(columns, |col| {
            let bins = FeatureBins::from_values(col, max_bins);
            let codes = bins.assign(col);
            (bins.cuts, codes)
        });
        let (cuts, codes) = per.into_iter().unzip();
        Binned { cuts, codes }
    }
}

enum Slot {
    Open {
        rows: Vec<usize>,
        stats: GradStats,
        depth: usize,
        best: Option<SplitCandidate>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

struct Grower<'a> {
    columns: &'a [Vec<f64>],
    binned: &'a Binned,
    split: SplitParams,
    params: &'a GbdtParams,
}

impl Grower<'_> {
    fn best_split(&self, rows: &[usize], gw: &[f64], hw: &[f64]) -> Option<SplitCandidate> {
        if rows.len() < 2 {
            return None;
        }
        let per = par::map_range(self.columns.len(), |j| {
            let cuts = &self.binned.cuts[j];
            let bins = Histogram::accumulate(cuts.len() + 1, &self.binned.codes[j], rows, gw, hw);
            best_split_bins(cuts, &bins, j, &self.split)
        });
        reduce_in_order(per)
    }

    fn can_deepen(&self, depth: usize) -> bool {
        self.params.max_depth.is_none_or(|m| depth < m)
    }

    fn grow(
        &self,
        rows: Vec<usize>,
        gw: &[f64],
        hw: &[f64],
        round: usize,
        observer: &mut dyn FnMut(&SplitEvent),
    ) -> Result<RegressionTree> {
        let stats = GradStats::of_rows(&rows, gw, hw);
        let best = if self.can_deepen(0) {
            self.best_split(&rows, gw, hw)
        } else {
            None
        };
        let mut slots = vec![Slot::Open {
            rows,
            stats,
            depth: 0,
            best,
        }];
        let mut leaves = 1usize;
        while leaves < self.params.num_leaves {
            let splittable: Vec<(usize, usize, SplitCandidate)> = slots
                .iter()
                .enumerate()
                .filter_map(|(id, s)| match s {
                    Slot::Open {
                        best: Some(c),
                        depth,
                        ..
                    } => Some((id, *depth, *c)),
                    _ => None,
                })
                .collect();
            let chosen = match self.params.growth {
                GrowthStrategy::LeafWise => {
                    splittable
                        .iter()
                        .copied()
                        .reduce(|a, b| if b.2.gain > a.2.gain { b } else { a })
                }
                GrowthStrategy::DepthWise => splittable.iter().copied().min_by_key(|c| (c.1, c.0)),
            };
            let Some((id, depth, cand)) = chosen else {
                break;
            };
            let (left, right) = (slots.len(), slots.len() + 1);
            let split = Slot::Split {
                feature: cand.feature,
                threshold: cand.threshold,
                left,
                right,
            };
            let Slot::Open { rows, stats, .. } = std::mem::replace(&mut slots[id], split) else {
                unreachable!("chosen slot is open")
            };
            observer(&SplitEvent {
                round,
                leaf: id,
                depth,
                parent: stats,
                split: cand,
                competing_gains: splittable
                    .iter()
                    .filter(|c| c.0 != id)
                    .map(|c| c.2.gain)
                    .collect(),
            });
            leaves += 1;

            let col = &self.columns[cand.feature];
            let (l_rows, r_rows): (Vec<usize>, Vec<usize>) =
                rows.into_iter().partition(|&i| col[i] <= cand.threshold);
            let more = leaves < self.params.num_leaves && self.can_deepen(depth + 1);
            let l_best = if more {
                self.best_split(&l_rows, gw, hw)
            } else {
                None
            };
            let r_best = if more {
                self.best_split(&r_rows, gw, hw)
            } else {
                None
            };
            slots.push(Slot::Open {
                rows: l_rows,
                stats: cand.left,
                depth: depth + 1,
                best: l_best,
            });
            slots.push(Slot::Open {
                rows: r_rows,
                stats: cand.right,
                depth: depth + 1,
                best: r_best,
            });
        }
        let root = self.assemble(&slots, 0)?;
        Ok(RegressionTree::new(
            root,
            self.columns.len(),
            self.params.tree_params(),
        ))
    }

    fn assemble(&self, slots: &[Slot], id: usize) -> Result<TreeNode> {
        Ok(match &slots[id] {
            Slot::Open { stats, .. } => TreeNode::leaf(
                leaf_weight(stats.grad_sum, stats.hess_sum, self.params.l2_reg)?,
                stats.count,
                stats.grad_sum,
                stats.hess_sum,
            ),
            Slot::Split {
                feature,
                threshold,
                left,
                right,
            } => TreeNode::Internal {
                feature: *feature,
                threshold: *threshold,
                left: Box::new(self.assemble(slots, *left)?),
                right: Box::new(self.assemble(slots, *right)?),
            },
        })
    }
}

pub fn fit_gbdt(ds: &Dataset, params: &GbdtParams) -> Result<Ensemble> {
    fit_gbdt_observed(ds, params, &mut |_| {})
}

/// [`fit_gbdt`] reporting every split to `observer` as it is taken.
pub fn fit_gbdt_observed(
    ds: &Dataset,
    params: &GbdtParams,
    observer: &mut dyn FnMut(&SplitEvent),
) -> Result<Ensemble> {
    params.validate()?;
    let n = ds.n_rows();
    if n == 0 {
        return Err(Error::Empty("cannot boost on an empty dataset".into()));
    }
    let y = ds.target();
    let columns = ds.columns();
    let binned = Binned::new(&columns, params.max_bins);
    let grower = Grower {
        columns: &columns,
        binned: &binned,
        split: params.split_params(),
        params,
    };

    let base_score = y.iter().sum::<f64>() / n as f64;
    let mut preds = vec![base_score; n];
    let mut trees = Vec::with_capacity(params.num_rounds);
    let mut gw = vec![0.0; n];
    let mut hw = vec![0.0; n];
    for round in 0..params.num_rounds {
        let gh = squared_loss_grad_hess(y, &preds)?;
        let (rows, weights) = match &params.goss {
            None => ((0..n).collect::<Vec<_>>(), vec![1.0; n]),
            Some(g) => {
                let s = goss_sample(
                    &gh.grads,
                    g.top_rate,
                    g.other_rate,
                    derive_seed(params.seed, round as u64),
                )?;
                (s.indices, s.weights)
            }
        };
        gw.iter_mut().for_each(|v| *v = 0.0);
        hw.iter_mut().for_each(|v| *v = 0.0);
        for (&i, &w) in rows.iter().zip(&weights) {
            gw[i] = gh.grads[i] * w;
            hw[i] = gh.hessians[i] * w;
        }
        let tree = grower.grow(rows, &gw, &hw, round, observer)?;
        let outputs = par::map_range(n, |i| tree.predict_unchecked(ds.row(i)));
        for (p, o) in preds.iter_mut().zip(outputs) {
            *p += params.learning_rate * o;
        }
        trees.push(tree);
    }
    Ok(Ensemble::new(
        base_score,
        params.learning_rate,
        ds.n_features(),
        trees,
        BoostingParams::Gbdt(params.clone()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_generate, FeatureSchema};
    use crate::metrics::mse;

    #[test]
    fn grad_hess() {
        let gh = squared_loss_grad_hess(&[3.0], &[5.0]).unwrap();
        assert_eq!((gh.grads[0], gh.hessians[0]), (2.0, 1.0));
        let y = [1.0, -2.0, 0.5];
        assert!(squared_loss_grad_hess(&y, &y)
            .unwrap()
            .grads
            .iter()
            .all(|&g| g == 0.0));
        let a = squared_loss_grad_hess(&[1.0], &[4.0]).unwrap().grads[0];
        let b = squared_loss_grad_hess(&[4.0], &[1.0]).unwrap().grads[0];
        assert_eq!(a, -b);
        assert!(squared_loss_grad_hess(&[1.0], &[]).is_err());
    }

    #[test]
    fn one_round_worked_example() {
        let ds = Dataset::from_column(&[0.0, 1.0, 2.0, 3.0], &[1.0, 1.0, -1.0, -1.0]).unwrap();
        let params = GbdtParams {
            num_rounds: 1,
            num_leaves: 2,
            learning_rate: 1.0,
            min_data_in_leaf: 1,
            ..GbdtParams::default()
        };
        let e = fit_gbdt(&ds, &params).unwrap();
        assert_eq!(e.base_score, 0.0);
        let t = &e.trees[0];
        match &t.root {
            TreeNode::Internal { threshold, .. } => assert_eq!(*threshold, 1.5),
            _ => panic!("expected a split"),
        }
        assert_eq!(t.leaf_values(), vec![1.0, -1.0]);
        assert_eq!(e.predict_dataset(&ds).unwrap(), ds.target());
    }

    #[test]
    fn constant_target() {
        let ds = Dataset::from_column(&[0.0, 1.0, 2.0, 3.0], &[0.7; 4]).unwrap();
        let e = fit_gbdt(
            &ds,
            &GbdtParams {
                num_rounds: 3,
                ..GbdtParams::default()
            },
        )
        .unwrap();
        assert!(e.trees.iter().all(|t| t.num_leaves == 1));
        assert_eq!(
            mse(ds.target(), &e.predict_dataset(&ds).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn invalid_params() {
        let ds = Dataset::from_column(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        for p in [
            GbdtParams {
                learning_rate: 0.0,
                ..GbdtParams::default()
            },
            GbdtParams {
                learning_rate: 1.5,
                ..GbdtParams::default()
            },
            GbdtParams {
                num_rounds: 0,
                ..GbdtParams::default()
            },
            GbdtParams {
                num_leaves: 1,
                ..GbdtParams::default()
            },
            GbdtParams {
                l2_reg: -1.0,
                ..GbdtParams::default()
            },
            GbdtParams {
                max_bins: 1,
                ..GbdtParams::default()
            },
            GbdtParams {
                min_data_in_leaf: 0,
                ..GbdtParams::default()
            },
            GbdtParams {
                goss: Some(GossParams {
                    top_rate: 0.5,
                    other_rate: 0.0,
                }),
                ..GbdtParams::default()
            },
        ] {
            assert!(fit_gbdt(&ds, &p).is_err(), "{p:?}");
        }
    }

    #[test]
    fn num_leaves_and_depth_caps() {
        let ds = synth_generate(300, 2, 0.1).unwrap();
        let p = GbdtParams {
            num_rounds: 3,
            num_leaves: 7,
            ..GbdtParams::default()
        };
        let e = fit_gbdt(&ds, &p).unwrap();
        assert!(e.trees.iter().all(|t| t.num_leaves <= 7));
        let p = GbdtParams {
            num_rounds: 3,
            num_leaves: 64,
            max_depth: Some(2),
            ..GbdtParams::default()
        };
        let e = fit_gbdt(&ds, &p).unwrap();
        assert!(e.trees.iter().all(|t| t.depth() <= 2 && t.num_leaves <= 4));
    }

    #[test]
    fn depth_wise_fills_levels_first() {
        let ds = synth_generate(400, 5, 0.1).unwrap();
        let p = GbdtParams {
            num_rounds: 1,
            num_leaves: 4,
            growth: GrowthStrategy::DepthWise,
            ..GbdtParams::default()
        };
        let mut depths = Vec::new();
        fit_gbdt_observed(&ds, &p, &mut |e| depths.push(e.depth)).unwrap();
        assert_eq!(depths, vec![0, 1, 1]);
    }

    #[test]
    fn leaf_sums_add_up() {
        let ds = synth_generate(250, 6, 0.2).unwrap();
        let e = fit_gbdt(
            &ds,
            &GbdtParams {
                num_rounds: 2,
                ..GbdtParams::default()
            },
        )
        .unwrap();
        let mut count = 0;
        e.trees[0].root.visit_leaves(&mut |l| {
            if let TreeNode::Leaf { n, .. } = l {
                count += n;
            }
        });
        assert_eq!(count, 250);
    }

    #[test]
    fn generic_schema_works() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, (i % 5) as f64]).collect();
        let y = (0..50).map(|i| if i < 25 { 0.0 } else { 3.0 }).collect();
        let ds = Dataset::from_rows(FeatureSchema::generic(2), &rows, y).unwrap();
        let e = fit_gbdt(
            &ds,
            &GbdtParams {
                num_rounds: 30,
                ..GbdtParams::default()
            },
        )
        .unwrap();
        let p = e.predict(&[10.0, 0.0]).unwrap();
        assert!(p < 0.2, "{p}");
    }
}
