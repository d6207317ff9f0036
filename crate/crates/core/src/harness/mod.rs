//! Benchmark runner, diagnostics and report writers behind the CLI.

mod benchmark;
mod config;
mod diagnose;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dataset::{load_csv, synth_generate, Dataset, FeatureSchema, SplitSpec};
use crate::error::Result;

pub use benchmark::{
    run_benchmark, run_models, BenchmarkConfig, BenchmarkReport, BenchmarkRow, RowStatus,
    DATASET_LABELS,
};
pub use config::KeyValueConfig;
pub use diagnose::{
    learning_curve, prediction_error, residuals, validation_curve, DiagnosticKind, Series,
    DEFAULT_LEAF_GRID,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DRIFTBOOST_OUT_DIR";
/// Output directory used when [`OUT_DIR_ENV`] is unset.
pub const DEFAULT_OUT_DIR: &str = "driftboost-out";

/// Where a dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schema: Option<PathBuf>,
    },
    Synth {
        n: usize,
        seed: u64,
        noise_sd: f64,
    },
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Csv { path, schema } => {
                let schema = match schema {
                    Some(p) => FeatureSchema::from_json_file(p)?,
                    None => FeatureSchema::seismic(),
                };
                load_csv(path, &schema)
            }
            DataSource::Synth { n, seed, noise_sd } => synth_generate(*n, *seed, *noise_sd),
        }
    }
}

/// Sidecar written next to a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub tool_version: String,
    pub kind: String,
    pub schema_hash: String,
    pub seed: u64,
    /// Train/test split the model was fit under; `None` when fit on all rows.
    pub split: Option<SplitSpec>,
    pub n_train: usize,
    pub n_test: usize,
    pub training_time_s: f64,
    pub data: DataSource,
}

impl ModelMetadata {
    /// `model.json` → `model.meta.json`.
    pub fn sidecar_path(model_path: &std::path::Path) -> PathBuf {
        let stem = model_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        model_path.with_file_name(format!("{stem}.meta.json"))
    }
}
