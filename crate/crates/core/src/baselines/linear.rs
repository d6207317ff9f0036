//! Least squares, ridge and elastic-net regression on standardized features.
//!
//! Every fit centres the target and standardizes each feature with the
//! training mean and population standard deviation. Coefficients are solved
//! in that space (`std_coefficients`) and also reported in original feature
//! units (`coefficients`, `intercept`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Standardizer;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularization {
    None,
    L2 { l2: f64 },
    ElasticNet { l1: f64, l2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub regularization: Regularization,
    pub standardizer: Standardizer,
    pub std_coefficients: Vec<f64>,
    pub y_mean: f64,
}

impl LinearModel {
    fn from_standardized(
        beta: Vec<f64>,
        y_mean: f64,
        standardizer: Standardizer,
        regularization: Regularization,
    ) -> Result<Self> {
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("linear coefficients".into()));
        }
        let coefficients: Vec<f64> = beta
            .iter()
            .enumerate()
            .map(|(j, b)| b / standardizer.scale(j))
            .collect();
        let intercept = y_mean
            - coefficients
                .iter()
                .zip(&standardizer.means)
                .map(|(c, m)| c * m)
                .sum::<f64>();
        Ok(LinearModel {
            coefficients,
            intercept,
            regularization,
            standardizer,
            std_coefficients: beta,
            y_mean,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Error::check_len(self.coefficients.len(), x.len())?;
        Ok(self.y_mean
            + x.iter()
                .enumerate()
                .map(|(j, &v)| self.std_coefficients[j] * self.standardizer.value(j, v))
                .sum::<f64>())
    }
}

struct Design {
    z: DMatrix<f64>,
    yc: DVector<f64>,
    y_mean: f64,
    standardizer: Standardizer,
}

fn design(ds: &Dataset) -> Design {
    let standardizer = Standardizer::fit(ds);
    let (n, d) = (ds.n_rows(), ds.n_features());
    let z = DMatrix::from_fn(n, d, |i, j| standardizer.value(j, ds.value(i, j)));
    let y_mean = ds.target().iter().sum::<f64>() / n as f64;
    let yc = DVector::from_iterator(n, ds.target().iter().map(|y| y - y_mean));
    Design {
        z,
        yc,
        y_mean,
        standardizer,
    }
}

/// Ordinary least squares through a QR decomposition.
///
/// A column whose QR pivot is negligible relative to the largest one lies in
/// the span of the columns before it (constant columns included) and makes the
/// fit fail with [`Error::RankDeficient`].
pub fn fit_ols(ds: &Dataset) -> Result<LinearModel> {
    let Design {
        z,
        yc,
        y_mean,
        standardizer,
    } = design(ds);
    let (n, d) = z.shape();
    let qr = z.qr();
    let r = qr.r();
    let k = n.min(d);
    let scale = (0..k).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE) * (n.max(d) as f64);
    let deficient: Vec<String> = (0..d)
        .filter(|&j| j >= k || r[(j, j)].abs() <= tol)
        .map(|j| ds.schema().features[j].name.clone())
        .collect();
    if !deficient.is_empty() {
        return Err(Error::RankDeficient { columns: deficient });
    }
    let qty = qr.q().transpose() * yc;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::NonFinite("singular triangular factor".into()))?;
    LinearModel::from_standardized(
        beta.iter().copied().collect(),
        y_mean,
        standardizer,
        Regularization::None,
    )
}

/// Ridge regression: solves `(Z'Z + l2 I) b = Z'y` by Cholesky. `l2 = 0`
/// is plain least squares.
pub fn fit_ridge(ds: &Dataset, l2: f64) -> Result<LinearModel> {
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "l2 must be finite and >= 0, got {l2}"
        )));
    }
    if l2 == 0.0 {
        return fit_ols(ds);
    }
    let Design {
        z,
        yc,
        y_mean,
        standardizer,
    } = design(ds);
    let d = z.ncols();
    let gram = z.transpose() * &z + DMatrix::identity(d, d) * l2;
    let rhs = z.transpose() * yc;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::NonFinite("ridge normal equations not positive definite".into()))?;
    let beta = chol.solve(&rhs);
    LinearModel::from_standardized(
        beta.iter().copied().collect(),
        y_mean,
        standardizer,
        Regularization::L2 { l2 },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticNetParams {
    pub l1: f64,
    pub l2: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ElasticNetParams {
    fn default() -> Self {
        ElasticNetParams {
            l1: 0.01,
            l2: 0.0,
            tol: 1e-7,
            max_iter: 10_000,
        }
    }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Elastic net by cyclic coordinate descent, minimizing
/// `(1/2n)|y - Z b|^2 + l1 |b|_1 + (l2/2) |b|^2` over standardized `Z`.
/// Lasso is `l2 = 0`.
pub fn fit_elastic_net(ds: &Dataset, params: &ElasticNetParams) -> Result<LinearModel> {
    let ElasticNetParams {
        l1,
        l2,
        tol,
        max_iter,
    } = *params;
    for (name, v) in [("l1", l1), ("l2", l2)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "{name} must be finite and >= 0, got {v}"
            )));
        }
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidParam(
            "tol must be > 0 and max_iter >= 1".into(),
        ));
    }
    let Design {
        z,
        yc,
        y_mean,
        standardizer,
    } = design(ds);
    let (n, d) = z.shape();
    let nf = n as f64;
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|j| z.column(j).iter().copied().collect())
        .collect();
    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf)
        .collect();
    let mut beta = vec![0.0; d];
    let mut resid: Vec<f64> = yc.iter().copied().collect();
    let mut max_change = f64::INFINITY;
    for _ in 0..max_iter {
        max_change = 0.0f64;
        for j in 0..d {
            let denom = norms[j] + l2;
            let old = beta[j];
            let rho = cols[j]
                .iter()
                .zip(&resid)
                .map(|(zv, r)| zv * r)
                .sum::<f64>()
                / nf
                + norms[j] * old;
            let new = if denom > 0.0 {
                soft_threshold(rho, l1) / denom
            } else {
                0.0
            };
            if new != old {
                let delta = new - old;
                for (r, zv) in resid.iter_mut().zip(&cols[j]) {
                    *r -= zv * delta;
                }
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < tol {
            return LinearModel::from_standardized(
                beta,
                y_mean,
                standardizer,
                Regularization::ElasticNet { l1, l2 },
            );
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        max_change,
        coefficients: beta,
    })
}
