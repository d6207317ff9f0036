//! Random forests and extremely randomized trees.
//!
//! Tree `t` draws all of its randomness from a generator seeded with
//! `derive_seed(seed, t)`, so trees can be fit in any order or in parallel
//! and the forest is the same.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::par;
use crate::rng::{derive_seed, Rng};
use crate::tree::{fit_cart_on_rows, CartParams, RegressionTree, Splitter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestMode {
    /// Bootstrap rows per tree, best split over a random feature subset.
    RandomForest,
    /// All rows per tree, one random threshold per sampled feature.
    ExtraTrees,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub num_trees: usize,
    /// Fraction of features considered at each split.
    pub feature_subsample: f64,
    pub mode: ForestMode,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_leaves: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            num_trees: 100,
            feature_subsample: 1.0 / 3.0,
            mode: ForestMode::RandomForest,
            seed: 0,
            max_leaves: None,
            min_samples_leaf: 1,
        }
    }
}

impl ForestParams {
    /// Features per split: `max(1, floor(d * feature_subsample))`.
    pub fn max_features(&self, d: usize) -> usize {
        ((d as f64 * self.feature_subsample).floor() as usize).clamp(1, d.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_trees == 0 {
            return Err(Error::InvalidParam("num_trees must be >= 1".into()));
        }
        if !(self.feature_subsample > 0.0 && self.feature_subsample <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "feature_subsample must lie in (0, 1], got {}",
                self.feature_subsample
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<RegressionTree>,
    pub tree_seeds: Vec<u64>,
    pub params: ForestParams,
    pub n_features: usize,
}

pub fn fit_forest(ds: &Dataset, params: &ForestParams) -> Result<ForestModel> {
    params.validate()?;
    let n = ds.n_rows();
    if n == 0 {
        return Err(Error::Empty(
            "cannot fit a forest on an empty dataset".into(),
        ));
    }
    let d = ds.n_features();
    let max_features = params.max_features(d);
    let cart = CartParams {
        max_leaves: params.max_leaves,
        max_depth: None,
        min_samples_leaf: params.min_samples_leaf,
        splitter: match params.mode {
            ForestMode::RandomForest => Splitter::RandomSubset { max_features },
            ForestMode::ExtraTrees => Splitter::ExtraRandom { max_features },
        },
    };
    let columns = ds.columns();
    let tree_seeds: Vec<u64> = (0..params.num_trees)
        .map(|t| derive_seed(params.seed, t as u64))
        .collect();
    let trees = par::map_slice(&tree_seeds, |&s| {
        let mut rng = Rng::new(s);
        let rows = match params.mode {
            ForestMode::RandomForest => (0..n).map(|_| rng.below(n)).collect(),
            ForestMode::ExtraTrees => (0..n).collect(),
        };
        fit_cart_on_rows(&columns, ds.target(), rows, &cart, Some(&mut rng))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        trees,
        tree_seeds,
        params: params.clone(),
        n_features: d,
    })
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Error::check_len(self.n_features, x.len())?;
        Ok(self
            .trees
            .iter()
            .map(|t| t.predict_unchecked(x))
            .sum::<f64>()
            / self.trees.len() as f64)
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        Error::check_len(self.n_features, ds.n_features())?;
        Ok(par::map_range(ds.n_rows(), |i| {
            let x = ds.row(i);
            self.trees
                .iter()
                .map(|t| t.predict_unchecked(x))
                .sum::<f64>()
                / self.trees.len() as f64
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth_generate;

    #[test]
    fn max_features_rule() {
        let p = ForestParams::default();
        assert_eq!(p.max_features(18), 6);
        assert_eq!(p.max_features(2), 1);
        assert_eq!(
            ForestParams {
                feature_subsample: 1.0,
                ..p
            }
            .max_features(5),
            5
        );
    }

    #[test]
    fn deterministic_per_seed() {
        let ds = synth_generate(120, 1, 0.2).unwrap();
        for mode in [ForestMode::RandomForest, ForestMode::ExtraTrees] {
            let p = ForestParams {
                num_trees: 5,
                mode,
                seed: 9,
                ..Default::default()
            };
            assert_eq!(fit_forest(&ds, &p).unwrap(), fit_forest(&ds, &p).unwrap());
            let other = ForestParams {
                seed: 10,
                ..p.clone()
            };
            assert_ne!(
                fit_forest(&ds, &p).unwrap(),
                fit_forest(&ds, &other).unwrap()
            );
        }
    }

    #[test]
    fn constant_target() {
        let ds = synth_generate(60, 2, 0.0)
            .unwrap()
            .with_target(vec![1.25; 60])
            .unwrap();
        for mode in [ForestMode::RandomForest, ForestMode::ExtraTrees] {
            let m = fit_forest(
                &ds,
                &ForestParams {
                    num_trees: 4,
                    mode,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(m.predict_dataset(&ds).unwrap().iter().all(|&p| p == 1.25));
        }
    }

    #[test]
    fn averaging_reduces_variance() {
        let train = synth_generate(150, 3, 0.3).unwrap();
        let test = synth_generate(20, 4, 0.3).unwrap();
        let spread = |num_trees: usize| -> f64 {
            let preds: Vec<Vec<f64>> = (0..50)
                .map(|s| {
                    let p = ForestParams {
                        num_trees,
                        seed: s,
                        ..Default::default()
                    };
                    fit_forest(&train, &p)
                        .unwrap()
                        .predict_dataset(&test)
                        .unwrap()
                })
                .collect();
            (0..test.n_rows())
                .map(|i| {
                    let m = preds.iter().map(|p| p[i]).sum::<f64>() / 50.0;
                    preds.iter().map(|p| (p[i] - m).powi(2)).sum::<f64>() / 50.0
                })
                .sum::<f64>()
        };
        assert!(spread(10) <= spread(1));
    }

    #[test]
    fn invalid() {
        let ds = synth_generate(10, 1, 0.0).unwrap();
        assert!(fit_forest(
            &ds,
            &ForestParams {
                num_trees: 0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(fit_forest(
            &ds,
            &ForestParams {
                feature_subsample: 0.0,
                ..Default::default()
            }
        )
        .is_err());
    }
}
