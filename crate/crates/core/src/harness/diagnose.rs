//! Plot-ready series for prediction-error, residual, learning-curve and
//! validation-curve charts.
//!
//! Learning curves are per boosting round: row `t` scores the ensemble made
//! of its first `t` trees.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::boosting::{BoostingParams, Ensemble};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::rmse;
use crate::model::{DecisionTreeParams, Model, ModelConfig};

/// Leaf counts swept by [`validation_curve`] unless told otherwise.
pub const DEFAULT_LEAF_GRID: [usize; 6] = [2, 4, 8, 16, 31, 63];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    PredictionError,
    Residuals,
    LearningCurve,
    ValidationCurve,
}

impl DiagnosticKind {
    pub const ALL: [DiagnosticKind; 4] = [
        DiagnosticKind::PredictionError,
        DiagnosticKind::Residuals,
        DiagnosticKind::LearningCurve,
        DiagnosticKind::ValidationCurve,
    ];

    pub fn id(self) -> &'static str {
        match self {
            DiagnosticKind::PredictionError => "prediction_error",
            DiagnosticKind::Residuals => "residuals",
            DiagnosticKind::LearningCurve => "learning_curve",
            DiagnosticKind::ValidationCurve => "validation_curve",
        }
    }
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DiagnosticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DiagnosticKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::InvalidParam(format!("unknown diagnostic '{s}'")))
    }
}

/// A numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    fn new(columns: &[&str]) -> Self {
        Series {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }
}

/// Columns `actual, predicted, identity`. `identity` is the y = x reference
/// line evaluated at `actual`, so plotting it against `actual` draws the
/// perfect-prediction diagonal.
pub fn prediction_error(model: &Model, ds: &Dataset) -> Result<Series> {
    let pred = model.predict_dataset(ds)?;
    let mut s = Series::new(&["actual", "predicted", "identity"]);
    s.rows = ds
        .target()
        .iter()
        .zip(pred)
        .map(|(&a, p)| vec![a, p, a])
        .collect();
    Ok(s)
}

/// Columns `predicted, residual` with `residual = actual - predicted`.
pub fn residuals(model: &Model, ds: &Dataset) -> Result<Series> {
    let pred = model.predict_dataset(ds)?;
    let mut s = Series::new(&["predicted", "residual"]);
    s.rows = ds
        .target()
        .iter()
        .zip(pred)
        .map(|(&a, p)| vec![p, a - p])
        .collect();
    Ok(s)
}

fn ensemble_of(model: &Model) -> Result<&Ensemble> {
    model.as_ensemble().ok_or_else(|| {
        Error::Unsupported(format!(
            "learning curves need a boosted ensemble, got {}",
            model.kind()
        ))
    })
}

/// One row per round `1..=K`: `round, train_rmse, test_rmse`.
pub fn learning_curve(model: &Model, train: &Dataset, test: &Dataset) -> Result<Series> {
    let ens = ensemble_of(model)?;
    let tr = ens.staged_predict(train)?;
    let te = ens.staged_predict(test)?;
    let mut s = Series::new(&["round", "train_rmse", "test_rmse"]);
    for t in 1..tr.len() {
        s.rows.push(vec![
            t as f64,
            rmse(train.target(), &tr[t])?,
            rmse(test.target(), &te[t])?,
        ]);
    }
    Ok(s)
}

/// Refit the model's configuration at each leaf count in `grid`:
/// `num_leaves, train_rmse, test_rmse`.
pub fn validation_curve(
    model: &Model,
    train: &Dataset,
    test: &Dataset,
    grid: &[usize],
) -> Result<Series> {
    let at = |leaves: usize| -> Result<ModelConfig> {
        Ok(match model {
            Model::Gbdt(Ensemble {
                params: BoostingParams::Gbdt(p),
                ..
            }) => ModelConfig::Gbdt(crate::boosting::GbdtParams {
                num_leaves: leaves,
                ..p.clone()
            }),
            Model::GradientBoosting(Ensemble {
                params: BoostingParams::Residual(p),
                ..
            }) => ModelConfig::GradientBoosting(crate::boosting::ResidualBoostingParams {
                max_leaves: Some(leaves),
                ..p.clone()
            }),
            Model::DecisionTree(t) => ModelConfig::DecisionTree(DecisionTreeParams {
                max_leaves: Some(leaves),
                min_samples_leaf: t.params.min_samples_leaf.unwrap_or(1),
                ccp_alpha: t.params.ccp_alpha.unwrap_or(0.0),
            }),
            other => {
                return Err(Error::Unsupported(format!(
                    "validation curve over leaf counts is not defined for {}",
                    other.kind()
                )))
            }
        })
    };
    if grid.is_empty() {
        return Err(Error::InvalidParam("validation grid is empty".into()));
    }
    let mut s = Series::new(&["num_leaves", "train_rmse", "test_rmse"]);
    for &leaves in grid {
        let fitted = at(leaves)?.fit(train)?;
        s.rows.push(vec![
            leaves as f64,
            rmse(train.target(), &fitted.predict_dataset(train)?)?,
            rmse(test.target(), &fitted.predict_dataset(test)?)?,
        ]);
    }
    Ok(s)
}
