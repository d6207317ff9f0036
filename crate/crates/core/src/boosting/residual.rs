//! Plain residual boosting with CART trees.
//!
//! Starts from a zero model with residuals equal to the targets. Each round
//! fits a CART tree to the residuals, optionally prunes it by cost-complexity,
//! and moves predictions and residuals by `learning_rate` times its output.

use serde::{Deserialize, Serialize};

use super::ensemble::{BoostingParams, Ensemble};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::par;
use crate::tree::{fit_cart_on_rows, prune_ccp, CartParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualBoostingParams {
    pub num_rounds: usize,
    pub learning_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_leaves: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Cost-complexity penalty for pruning each tree; 0 keeps it unpruned.
    pub ccp_alpha: f64,
}

impl Default for ResidualBoostingParams {
    fn default() -> Self {
        ResidualBoostingParams {
            num_rounds: 100,
            learning_rate: 0.1,
            max_leaves: None,
            max_depth: Some(3),
            min_samples_leaf: 1,
            ccp_alpha: 0.0,
        }
    }
}

impl ResidualBoostingParams {
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
        if self.max_leaves == Some(0) {
            return bad("max_leaves must be >= 1".into());
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be >= 1".into());
        }
        if !(self.ccp_alpha >= 0.0 && self.ccp_alpha.is_finite()) {
            return bad(format!(
                "ccp_alpha must be finite and >= 0, got {}",
                self.ccp_alpha
            ));
        }
        Ok(())
    }
}

pub fn fit_residual_boosting(ds: &Dataset, params: &ResidualBoostingParams) -> Result<Ensemble> {
    params.validate()?;
    let n = ds.n_rows();
    if n == 0 {
        return Err(Error::Empty("cannot boost on an empty dataset".into()));
    }
    let columns = ds.columns();
    let cart = CartParams {
        max_leaves: params.max_leaves,
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        ..CartParams::default()
    };
    let mut residuals = ds.target().to_vec();
    let mut trees = Vec::with_capacity(params.num_rounds);
    for _ in 0..params.num_rounds {
        let mut tree = fit_cart_on_rows(&columns, &residuals, (0..n).collect(), &cart, None)?;
        if params.ccp_alpha > 0.0 {
            tree = prune_ccp(&tree, &ds.with_target(residuals.clone())?, params.ccp_alpha)?;
        }
        let outputs = par::map_range(n, |i| tree.predict_unchecked(ds.row(i)));
        for (r, o) in residuals.iter_mut().zip(outputs) {
            *r -= params.learning_rate * o;
        }
        trees.push(tree);
    }
    Ok(Ensemble::new(
        0.0,
        params.learning_rate,
        ds.n_features(),
        trees,
        BoostingParams::Residual(params.clone()),
    ))
}
