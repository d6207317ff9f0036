use serde::{Deserialize, Serialize};

use super::gbdt::GbdtParams;
use super::residual::ResidualBoostingParams;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::par;
use crate::tree::RegressionTree;

pub const ENSEMBLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum BoostingParams {
    Gbdt(GbdtParams),
    Residual(ResidualBoostingParams),
}

/// Additive tree model: `base_score + learning_rate * sum of tree outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub format_version: u32,
    pub base_score: f64,
    pub learning_rate: f64,
    pub n_features: usize,
    pub trees: Vec<RegressionTree>,
    pub params: BoostingParams,
}

impl Ensemble {
    pub fn new(
        base_score: f64,
        learning_rate: f64,
        n_features: usize,
        trees: Vec<RegressionTree>,
        params: BoostingParams,
    ) -> Self {
        Ensemble {
            format_version: ENSEMBLE_FORMAT_VERSION,
            base_score,
            learning_rate,
            n_features,
            trees,
            params,
        }
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    /// Prediction from the first `k` trees. Trees are added one at a time,
    /// `acc += learning_rate * tree(x)`, the same order training used.
    pub(crate) fn predict_first(&self, x: &[f64], k: usize) -> f64 {
        self.trees[..k].iter().fold(self.base_score, |acc, t| {
            acc + self.learning_rate * t.predict_unchecked(x)
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Error::check_len(self.n_features, x.len())?;
        Ok(self.predict_first(x, self.trees.len()))
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        Error::check_len(self.n_features, ds.n_features())?;
        Ok(par::map_range(ds.n_rows(), |i| {
            self.predict_first(ds.row(i), self.trees.len())
        }))
    }

    /// Row `t` holds every sample's prediction from the first `t` trees, for
    /// `t = 0..=num_trees`. Row 0 is the base score.
    pub fn staged_predict(&self, ds: &Dataset) -> Result<Vec<Vec<f64>>> {
        Error::check_len(self.n_features, ds.n_features())?;
        let per_row: Vec<Vec<f64>> = par::map_range(ds.n_rows(), |i| {
            let x = ds.row(i);
            let mut acc = self.base_score;
            let mut stages = Vec::with_capacity(self.trees.len() + 1);
            stages.push(acc);
            for t in &self.trees {
                acc += self.learning_rate * t.predict_unchecked(x);
                stages.push(acc);
            }
            stages
        });
        Ok((0..=self.trees.len())
            .map(|t| per_row.iter().map(|s| s[t]).collect())
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != ENSEMBLE_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "ensemble format version {} not supported (expected {ENSEMBLE_FORMAT_VERSION})",
                self.format_version
            )));
        }
        for t in &self.trees {
            t.validate()?;
            if t.n_features != self.n_features {
                return Err(Error::Format(
                    "tree feature count differs from ensemble".into(),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{TreeNode, TreeParams};

    fn constant_tree(v: f64) -> RegressionTree {
        RegressionTree::new(TreeNode::leaf(v, 1, -v, 1.0), 1, TreeParams::default())
    }

    fn ens(trees: Vec<RegressionTree>, base: f64, lr: f64) -> Ensemble {
        Ensemble::new(
            base,
            lr,
            1,
            trees,
            BoostingParams::Gbdt(GbdtParams::default()),
        )
    }

    #[test]
    fn empty_is_base_score() {
        assert_eq!(ens(vec![], 1.25, 0.1).predict(&[3.0]).unwrap(), 1.25);
    }

    #[test]
    fn shrunk_sum() {
        assert_eq!(
            ens(vec![constant_tree(2.0)], 1.0, 0.5)
                .predict(&[0.0])
                .unwrap(),
            2.0
        );
        assert!(ens(vec![], 0.0, 0.5).predict(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn staged_rows_are_prefixes() {
        let e = ens(
            vec![constant_tree(2.0), constant_tree(-1.0), constant_tree(4.0)],
            1.0,
            0.5,
        );
        let ds = Dataset::from_column(&[0.0, 1.0], &[0.0, 0.0]).unwrap();
        let staged = e.staged_predict(&ds).unwrap();
        assert_eq!(staged.len(), 4);
        assert_eq!(staged[0], vec![1.0, 1.0]);
        assert_eq!(staged[1], vec![2.0, 2.0]);
        assert_eq!(staged[3], e.predict_dataset(&ds).unwrap());
    }
}
