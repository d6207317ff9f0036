//! Model registry and the versioned JSON model file.
//!
//! A [`ModelKind`] names every regressor in the comparison table, including
//! the ones this crate does not implement (they have no [`ModelConfig`] and
//! show up as `n/a` rows). A [`ModelConfig`] is a kind plus hyperparameters;
//! fitting it yields a [`Model`], which is saved inside a [`ModelFile`]
//! together with the feature schema it was trained on.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{
    fit_elastic_net, fit_forest, fit_knn, fit_ols, fit_ridge, ElasticNetParams, ForestMode,
    ForestModel, ForestParams, KnnModel, LinearModel,
};
use crate::boosting::{
    fit_gbdt, fit_residual_boosting, Ensemble, GbdtParams, ResidualBoostingParams,
};
use crate::dataset::{Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::par;
use crate::tree::{fit_cart_on_rows, prune_ccp, CartParams, RegressionTree};

pub const MODEL_FILE_FORMAT: &str = "driftboost-model";
pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gbdt,
    GradientBoosting,
    RandomForest,
    ExtraTrees,
    Knn,
    Linear,
    BayesianRidge,
    Ridge,
    DecisionTree,
    AdaBoost,
    ElasticNet,
    Lasso,
    Omp,
    Huber,
    Lars,
}

impl ModelKind {
    pub const ALL: [ModelKind; 15] = [
        ModelKind::Gbdt,
        ModelKind::GradientBoosting,
        ModelKind::RandomForest,
        ModelKind::ExtraTrees,
        ModelKind::Knn,
        ModelKind::Linear,
        ModelKind::BayesianRidge,
        ModelKind::Ridge,
        ModelKind::DecisionTree,
        ModelKind::AdaBoost,
        ModelKind::ElasticNet,
        ModelKind::Lasso,
        ModelKind::Omp,
        ModelKind::Huber,
        ModelKind::Lars,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ModelKind::Gbdt => "gbdt",
            ModelKind::GradientBoosting => "gradient_boosting",
            ModelKind::RandomForest => "random_forest",
            ModelKind::ExtraTrees => "extra_trees",
            ModelKind::Knn => "knn",
            ModelKind::Linear => "linear",
            ModelKind::BayesianRidge => "bayesian_ridge",
            ModelKind::Ridge => "ridge",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::AdaBoost => "ada_boost",
            ModelKind::ElasticNet => "elastic_net",
            ModelKind::Lasso => "lasso",
            ModelKind::Omp => "omp",
            ModelKind::Huber => "huber",
            ModelKind::Lars => "lars",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Gbdt => "Leaf-wise Histogram GBDT",
            ModelKind::GradientBoosting => "Gradient Boosting Regressor",
            ModelKind::RandomForest => "Random Forest Regressor",
            ModelKind::ExtraTrees => "Extra Trees Regressor",
            ModelKind::Knn => "k-Nearest Neighbors Regressor",
            ModelKind::Linear => "Linear Regression",
            ModelKind::BayesianRidge => "Bayesian Ridge",
            ModelKind::Ridge => "Ridge Regression",
            ModelKind::DecisionTree => "Decision Tree Regressor",
            ModelKind::AdaBoost => "AdaBoost Regressor",
            ModelKind::ElasticNet => "Elastic Net",
            ModelKind::Lasso => "Lasso Regression",
            ModelKind::Omp => "Orthogonal Matching Pursuit",
            ModelKind::Huber => "Huber Regressor",
            ModelKind::Lars => "Least Angle Regression",
        }
    }

    pub fn is_implemented(self) -> bool {
        self.default_config().is_some()
    }

    /// Position in [`ModelKind::ALL`]; per-model seeds derive from it.
    pub fn index(self) -> usize {
        ModelKind::ALL
            .iter()
            .position(|&k| k == self)
            .expect("listed")
    }

    /// Default hyperparameters, or `None` for kinds without an implementation.
    pub fn default_config(self) -> Option<ModelConfig> {
        Some(match self {
            ModelKind::Gbdt => ModelConfig::Gbdt(GbdtParams::default()),
            ModelKind::GradientBoosting => {
                ModelConfig::GradientBoosting(ResidualBoostingParams::default())
            }
            ModelKind::RandomForest => ModelConfig::RandomForest(ForestParams::default()),
            ModelKind::ExtraTrees => ModelConfig::ExtraTrees(ForestParams {
                mode: ForestMode::ExtraTrees,
                ..ForestParams::default()
            }),
            ModelKind::Knn => ModelConfig::Knn { k: 5 },
            ModelKind::Linear => ModelConfig::Linear,
            ModelKind::Ridge => ModelConfig::Ridge { l2: 1.0 },
            ModelKind::DecisionTree => ModelConfig::DecisionTree(DecisionTreeParams::default()),
            ModelKind::ElasticNet => ModelConfig::ElasticNet(ElasticNetParams {
                l1: 0.01,
                l2: 0.01,
                ..ElasticNetParams::default()
            }),
            ModelKind::Lasso => ModelConfig::Lasso(ElasticNetParams {
                l1: 0.01,
                l2: 0.0,
                ..ElasticNetParams::default()
            }),
            ModelKind::BayesianRidge
            | ModelKind::AdaBoost
            | ModelKind::Omp
            | ModelKind::Huber
            | ModelKind::Lars => return None,
        })
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| {
                let ids: Vec<&str> = ModelKind::ALL.iter().map(|k| k.id()).collect();
                Error::InvalidParam(format!(
                    "unknown model kind '{s}' (known: {})",
                    ids.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_leaves: Option<usize>,
    pub min_samples_leaf: usize,
    pub ccp_alpha: f64,
}

impl Default for DecisionTreeParams {
    fn default() -> Self {
        DecisionTreeParams {
            max_leaves: None,
            min_samples_leaf: 1,
            ccp_alpha: 0.0,
        }
    }
}

/// A model kind with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Gbdt(GbdtParams),
    GradientBoosting(ResidualBoostingParams),
    RandomForest(ForestParams),
    ExtraTrees(ForestParams),
    Knn { k: usize },
    Linear,
    Ridge { l2: f64 },
    DecisionTree(DecisionTreeParams),
    ElasticNet(ElasticNetParams),
    Lasso(ElasticNetParams),
}

impl ModelConfig {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Gbdt(_) => ModelKind::Gbdt,
            ModelConfig::GradientBoosting(_) => ModelKind::GradientBoosting,
            ModelConfig::RandomForest(_) => ModelKind::RandomForest,
            ModelConfig::ExtraTrees(_) => ModelKind::ExtraTrees,
            ModelConfig::Knn { .. } => ModelKind::Knn,
            ModelConfig::Linear => ModelKind::Linear,
            ModelConfig::Ridge { .. } => ModelKind::Ridge,
            ModelConfig::DecisionTree(_) => ModelKind::DecisionTree,
            ModelConfig::ElasticNet(_) => ModelKind::ElasticNet,
            ModelConfig::Lasso(_) => ModelKind::Lasso,
        }
    }

    /// Seed for the randomized kinds; a no-op for deterministic ones.
    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            ModelConfig::Gbdt(p) => p.seed = seed,
            ModelConfig::RandomForest(p) | ModelConfig::ExtraTrees(p) => p.seed = seed,
            _ => {}
        }
        self
    }

    /// Set one hyperparameter by name. `value` is read as JSON when it
    /// parses (numbers, booleans, `null`, objects) and as a string otherwise.
    pub fn with_param(self, key: &str, value: &str) -> Result<Self> {
        let mut json = serde_json::to_value(&self)?;
        let obj = json.as_object_mut().expect("configs serialize to objects");
        if key == "kind" || !obj.contains_key(key) && !self.accepts_optional(key) {
            let mut known: Vec<&String> = obj.keys().filter(|k| *k != "kind").collect();
            known.sort();
            return Err(Error::InvalidParam(format!(
                "model '{}' has no parameter '{key}' (known: {})",
                self.kind(),
                known
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
        let parsed = serde_json::from_str(value)
            .unwrap_or_else(|_| serde_json::Value::String(value.to_owned()));
        obj.insert(key.to_owned(), parsed);
        serde_json::from_value(json).map_err(|e| {
            Error::InvalidParam(format!(
                "bad value '{value}' for {}.{key}: {e}",
                self.kind()
            ))
        })
    }

    fn accepts_optional(&self, key: &str) -> bool {
        match self {
            ModelConfig::Gbdt(_) => matches!(key, "max_depth" | "goss"),
            ModelConfig::GradientBoosting(_) => matches!(key, "max_depth" | "max_leaves"),
            ModelConfig::RandomForest(_)
            | ModelConfig::ExtraTrees(_)
            | ModelConfig::DecisionTree(_) => key == "max_leaves",
            _ => false,
        }
    }

    pub fn fit(&self, ds: &Dataset) -> Result<Model> {
        Ok(match self {
            ModelConfig::Gbdt(p) => Model::Gbdt(fit_gbdt(ds, p)?),
            ModelConfig::GradientBoosting(p) => {
                Model::GradientBoosting(fit_residual_boosting(ds, p)?)
            }
            ModelConfig::RandomForest(p) => Model::RandomForest(fit_forest(ds, p)?),
            ModelConfig::ExtraTrees(p) => Model::ExtraTrees(fit_forest(ds, p)?),
            ModelConfig::Knn { k } => Model::Knn(fit_knn(ds, *k)?),
            ModelConfig::Linear => Model::Linear(fit_ols(ds)?),
            ModelConfig::Ridge { l2 } => Model::Ridge(fit_ridge(ds, *l2)?),
            ModelConfig::DecisionTree(p) => {
                let cart = CartParams {
                    max_leaves: p.max_leaves,
                    min_samples_leaf: p.min_samples_leaf,
                    ..CartParams::default()
                };
                let tree = fit_cart_on_rows(
                    &ds.columns(),
                    ds.target(),
                    (0..ds.n_rows()).collect(),
                    &cart,
                    None,
                )?;
                Model::DecisionTree(if p.ccp_alpha > 0.0 {
                    prune_ccp(&tree, ds, p.ccp_alpha)?
                } else {
                    tree
                })
            }
            ModelConfig::ElasticNet(p) => Model::ElasticNet(fit_elastic_net(ds, p)?),
            ModelConfig::Lasso(p) => {
                if p.l2 != 0.0 {
                    return Err(Error::InvalidParam("lasso requires l2 = 0".into()));
                }
                Model::Lasso(fit_elastic_net(ds, p)?)
            }
        })
    }
}

/// A fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "fitted", rename_all = "snake_case")]
pub enum Model {
    Gbdt(Ensemble),
    GradientBoosting(Ensemble),
    RandomForest(ForestModel),
    ExtraTrees(ForestModel),
    Knn(KnnModel),
    Linear(LinearModel),
    Ridge(LinearModel),
    DecisionTree(RegressionTree),
    ElasticNet(LinearModel),
    Lasso(LinearModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Gbdt(_) => ModelKind::Gbdt,
            Model::GradientBoosting(_) => ModelKind::GradientBoosting,
            Model::RandomForest(_) => ModelKind::RandomForest,
            Model::ExtraTrees(_) => ModelKind::ExtraTrees,
            Model::Knn(_) => ModelKind::Knn,
            Model::Linear(_) => ModelKind::Linear,
            Model::Ridge(_) => ModelKind::Ridge,
            Model::DecisionTree(_) => ModelKind::DecisionTree,
            Model::ElasticNet(_) => ModelKind::ElasticNet,
            Model::Lasso(_) => ModelKind::Lasso,
        }
    }

    pub fn as_ensemble(&self) -> Option<&Ensemble> {
        match self {
            Model::Gbdt(e) | Model::GradientBoosting(e) => Some(e),
            _ => None,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            Model::Gbdt(e) | Model::GradientBoosting(e) => e.predict(x),
            Model::RandomForest(f) | Model::ExtraTrees(f) => f.predict(x),
            Model::Knn(m) => m.predict(x),
            Model::Linear(m) | Model::Ridge(m) | Model::ElasticNet(m) | Model::Lasso(m) => {
                m.predict(x)
            }
            Model::DecisionTree(t) => t.predict(x),
        }
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        match self {
            Model::Gbdt(e) | Model::GradientBoosting(e) => e.predict_dataset(ds),
            Model::RandomForest(f) | Model::ExtraTrees(f) => f.predict_dataset(ds),
            Model::Knn(m) => m.predict_dataset(ds),
            _ => par::map_range(ds.n_rows(), |i| self.predict(ds.row(i)))
                .into_iter()
                .collect(),
        }
    }
}

/// On-disk container: a fitted model plus the schema it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub schema_hash: String,
    pub schema: FeatureSchema,
    pub model: Model,
}

impl ModelFile {
    pub fn new(model: Model, schema: &FeatureSchema) -> Self {
        ModelFile {
            format: MODEL_FILE_FORMAT.to_owned(),
            version: MODEL_FILE_VERSION,
            schema_hash: schema.hash(),
            schema: schema.clone(),
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let head: serde_json::Value = serde_json::from_str(text)?;
        let format = head.get("format").and_then(|v| v.as_str());
        if format != Some(MODEL_FILE_FORMAT) {
            return Err(Error::Format(format!("not a {MODEL_FILE_FORMAT} file")));
        }
        let version = head.get("version").and_then(|v| v.as_u64());
        if version != Some(MODEL_FILE_VERSION as u64) {
            return Err(Error::Format(format!(
                "unsupported model file version {version:?}, expected {MODEL_FILE_VERSION}"
            )));
        }
        let file: ModelFile = serde_json::from_value(head)?;
        if file.schema.hash() != file.schema_hash {
            return Err(Error::Format(
                "stored schema does not match its hash".into(),
            ));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Refuses data whose schema differs from the training schema.
    pub fn check_schema(&self, schema: &FeatureSchema) -> Result<()> {
        let hash = schema.hash();
        if hash != self.schema_hash {
            return Err(Error::SchemaMismatch(format!(
                "model expects schema {} but data has schema {hash}",
                self.schema_hash
            )));
        }
        Ok(())
    }
}
