//! Comparison regressors: linear models, k-nearest neighbours and
//! random/extra-trees forests.

mod forest;
mod knn;
mod linear;

use serde::{Deserialize, Serialize};

use crate::dataset::{feature_stats, Dataset};

pub use forest::{fit_forest, ForestMode, ForestModel, ForestParams};
pub use knn::{fit_knn, KnnModel};
pub use linear::{
    fit_elastic_net, fit_ols, fit_ridge, ElasticNetParams, LinearModel, Regularization,
};

/// Per-feature centring and scaling captured at fit time.
///
/// Constant features keep their raw standard deviation (0) but are scaled by
/// 1, so they standardize to an all-zero column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(ds: &Dataset) -> Self {
        let stats = feature_stats(ds);
        Standardizer {
            means: stats.iter().map(|s| s.mean).collect(),
            sds: stats.iter().map(|s| s.sd).collect(),
        }
    }

    pub fn scale(&self, j: usize) -> f64 {
        if self.sds[j] > 0.0 {
            self.sds[j]
        } else {
            1.0
        }
    }

    pub fn value(&self, j: usize, x: f64) -> f64 {
        (x - self.means[j]) / self.scale(j)
    }

    pub fn row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, &v)| self.value(j, v))
            .collect()
    }
}
