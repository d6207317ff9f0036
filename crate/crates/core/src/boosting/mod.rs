//! Boosted tree ensembles.

mod ensemble;
mod gbdt;
mod goss;
pub mod objective;
mod residual;

pub use ensemble::{BoostingParams, Ensemble, ENSEMBLE_FORMAT_VERSION};
pub use gbdt::{
    fit_gbdt, fit_gbdt_observed, squared_loss_grad_hess, GbdtParams, GradHess, GrowthStrategy,
    SplitEvent,
};
pub use goss::{goss_sample, GossParams, GossSample};
pub use objective::{leaf_weight, regularized_objective, split_gain, structure_score};
pub use residual::{fit_residual_boosting, ResidualBoostingParams};
