//! Regression metrics and model ranking.
//!
//! `r2` is returned as computed and goes negative for predictions worse than
//! the mean. `mape` is the mean absolute percentage error, normalized by `n`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest `|y|` accepted by [`mape`].
pub const MAPE_MIN_ABS_ACTUAL: f64 = 1e-12;

/// Column headers of a report row, in table order.
pub const REPORT_COLUMNS: [&str; 6] = ["R²", "MAE", "MSE", "RMSE", "MAPE", "TT (Sec)"];

fn check(y: &[f64], y_hat: &[f64], min_n: usize) -> Result<()> {
    Error::check_len(y.len(), y_hat.len())?;
    if y.len() < min_n {
        return Err(Error::Empty(format!(
            "metric needs at least {min_n} samples, got {}",
            y.len()
        )));
    }
    Ok(())
}

pub fn r2(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check(y, y_hat, 2)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::InvalidDataset(
            "r2 undefined for constant actual values".into(),
        ));
    }
    let ss_res: f64 = y.iter().zip(y_hat).map(|(a, p)| (a - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn mae(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check(y, y_hat, 1)?;
    Ok(y.iter().zip(y_hat).map(|(a, p)| (p - a).abs()).sum::<f64>() / y.len() as f64)
}

pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check(y, y_hat, 1)?;
    Ok(y.iter()
        .zip(y_hat)
        .map(|(a, p)| (p - a).powi(2))
        .sum::<f64>()
        / y.len() as f64)
}

pub fn rmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    mse(y, y_hat).map(f64::sqrt)
}

pub fn mape(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check(y, y_hat, 1)?;
    if let Some(i) = y.iter().position(|v| v.abs() < MAPE_MIN_ABS_ACTUAL) {
        return Err(Error::InvalidDataset(format!(
            "mape undefined: actual value at index {i} is {}",
            y[i]
        )));
    }
    let total: f64 = y
        .iter()
        .zip(y_hat)
        .map(|(a, p)| (a - p).abs() / a.abs())
        .sum();
    Ok(100.0 * total / y.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model_name: String,
    pub n: usize,
    pub r2: f64,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub mape: f64,
    /// Wall-clock fit duration in seconds.
    pub training_time_s: f64,
}

impl MetricsReport {
    /// Metric values in [`REPORT_COLUMNS`] order.
    pub fn values(&self) -> [f64; 6] {
        [
            self.r2,
            self.mae,
            self.mse,
            self.rmse,
            self.mape,
            self.training_time_s,
        ]
    }
}

pub fn evaluate(
    y_hat: &[f64],
    y: &[f64],
    model_name: &str,
    training_time_s: f64,
) -> Result<MetricsReport> {
    let mse = mse(y, y_hat)?;
    Ok(MetricsReport {
        model_name: model_name.to_owned(),
        n: y.len(),
        r2: r2(y, y_hat)?,
        mae: mae(y, y_hat)?,
        mse,
        rmse: mse.sqrt(),
        mape: mape(y, y_hat)?,
        training_time_s: training_time_s.max(0.0),
    })
}

/// Ordering used by [`rank_models`]: R² descending, then RMSE ascending, then
/// model name.
pub fn rank_order(a: &MetricsReport, b: &MetricsReport) -> Ordering {
    b.r2.total_cmp(&a.r2)
        .then_with(|| a.rmse.total_cmp(&b.rmse))
        .then_with(|| a.model_name.cmp(&b.model_name))
}

/// Best model first. Training time never affects the order.
pub fn rank_models(mut reports: Vec<MetricsReport>) -> Vec<MetricsReport> {
    reports.sort_by(rank_order);
    reports
}
