//! Fit-and-score runs over a set of models, and the ranked report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::DataSource;
use crate::dataset::{train_test_split, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, rank_order, MetricsReport, REPORT_COLUMNS};
use crate::model::{ModelConfig, ModelKind};
use crate::par;
use crate::rng::derive_seed;

/// Labels for the three building-typology tables. Any other label is accepted
/// too; these are the conventional ones.
pub const DATASET_LABELS: [&str; 3] = ["BARE", "FULL-MASONRY", "PILOTIS"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub data: DataSource,
    pub split: SplitSpec,
    /// Models in request order; `None` marks a kind with no implementation.
    pub models: Vec<(ModelKind, Option<ModelConfig>)>,
    pub seed: u64,
    pub label: String,
}

impl BenchmarkConfig {
    /// Every known kind with default hyperparameters.
    pub fn all_models() -> Vec<(ModelKind, Option<ModelConfig>)> {
        ModelKind::ALL
            .into_iter()
            .map(|k| (k, k.default_config()))
            .collect()
    }

    /// Default configs for `kinds` with `(kind, key, value)` overrides applied.
    pub fn resolve_models(
        kinds: &[ModelKind],
        overrides: &[(ModelKind, String, String)],
    ) -> Result<Vec<(ModelKind, Option<ModelConfig>)>> {
        if kinds.is_empty() {
            return Err(Error::InvalidParam(
                "benchmark needs at least one model".into(),
            ));
        }
        for (kind, key, _) in overrides {
            if !kinds.contains(kind) {
                return Err(Error::InvalidParam(format!(
                    "parameter {kind}.{key} given for a model that is not selected"
                )));
            }
        }
        kinds
            .iter()
            .map(|&kind| {
                let mut cfg = kind.default_config();
                for (k, key, value) in overrides.iter().filter(|o| o.0 == kind) {
                    cfg = match cfg {
                        Some(c) => Some(c.with_param(key, value)?),
                        None => {
                            return Err(Error::InvalidParam(format!(
                                "model {k} is not implemented and takes no parameters"
                            )))
                        }
                    };
                }
                Ok((kind, cfg))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed { error: String },
    NotImplemented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub kind: ModelKind,
    pub name: String,
    #[serde(flatten)]
    pub status: RowStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub label: String,
    pub tool_version: String,
    pub seed: u64,
    pub split: SplitSpec,
    pub n_train: usize,
    pub n_test: usize,
    pub rows: Vec<BenchmarkRow>,
}

fn run_one(
    kind: ModelKind,
    cfg: &ModelConfig,
    seed: u64,
    train: &Dataset,
    test: &Dataset,
) -> Result<MetricsReport> {
    let cfg = cfg
        .clone()
        .with_seed(derive_seed(seed, kind.index() as u64));
    let start = Instant::now();
    let model = cfg.fit(train)?;
    let tt = start.elapsed().as_secs_f64();
    let pred = model.predict_dataset(test)?;
    evaluate(&pred, test.target(), kind.display_name(), tt)
}

/// Fit every model on `train`, score on `test`, and order the rows: scored
/// models by rank, then failures, then unimplemented kinds, each group in
/// request order. Model `k` is seeded with `derive_seed(seed, k.index())`.
pub fn run_models(
    train: &Dataset,
    test: &Dataset,
    models: &[(ModelKind, Option<ModelConfig>)],
    seed: u64,
) -> Vec<BenchmarkRow> {
    let rows = par::map_slice(models, |(kind, cfg)| {
        let (status, metrics) = match cfg {
            None => (RowStatus::NotImplemented, None),
            Some(c) => match run_one(*kind, c, seed, train, test) {
                Ok(m) => (RowStatus::Ok, Some(m)),
                Err(e) => (
                    RowStatus::Failed {
                        error: e.to_string(),
                    },
                    None,
                ),
            },
        };
        BenchmarkRow {
            kind: *kind,
            name: kind.display_name().to_owned(),
            status,
            metrics,
        }
    });
    let group = |r: &BenchmarkRow| match r.status {
        RowStatus::Ok => 0,
        RowStatus::Failed { .. } => 1,
        RowStatus::NotImplemented => 2,
    };
    let mut ordered = rows;
    ordered.sort_by(|a, b| {
        group(a)
            .cmp(&group(b))
            .then_with(|| match (&a.metrics, &b.metrics) {
                (Some(x), Some(y)) => rank_order(x, y),
                _ => std::cmp::Ordering::Equal,
            })
    });
    ordered
}

pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if cfg.models.is_empty() {
        return Err(Error::InvalidParam(
            "benchmark needs at least one model".into(),
        ));
    }
    let ds = cfg.data.load()?;
    let (train, test) = train_test_split(&ds, cfg.split)?;
    let rows = run_models(&train, &test, &cfg.models, cfg.seed);
    Ok(BenchmarkReport {
        label: cfg.label.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        seed: cfg.seed,
        split: cfg.split,
        n_train: train.n_rows(),
        n_test: test.n_rows(),
        rows,
    })
}

impl BenchmarkReport {
    /// True when no implemented model produced a score.
    pub fn all_failed(&self) -> bool {
        !self.rows.iter().any(|r| r.status == RowStatus::Ok)
    }

    pub fn best(&self) -> Option<&BenchmarkRow> {
        self.rows.first().filter(|r| r.status == RowStatus::Ok)
    }

    /// Metrics at full precision, training time at 3 decimals.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["Model"];
        header.extend(REPORT_COLUMNS);
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.name.clone()];
            match (&row.status, &row.metrics) {
                (RowStatus::Ok, Some(m)) => {
                    let v = m.values();
                    rec.extend(v[..5].iter().map(|x| x.to_string()));
                    rec.push(format!("{:.3}", v[5]));
                }
                (RowStatus::Failed { .. }, _) => {
                    rec.extend(std::iter::repeat_n("failed".to_owned(), 6))
                }
                _ => rec.extend(std::iter::repeat_n("n/a".to_owned(), 6)),
            }
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plain-text table, metrics at 4 decimals.
    pub fn render_table(&self) -> String {
        let name_w = self
            .rows
            .iter()
            .map(|r| r.name.chars().count())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Performance metrics ({}): {} train / {} test rows, seed {}",
            self.label, self.n_train, self.n_test, self.seed
        );
        let _ = write!(out, "{:<name_w$}", "Model");
        for c in REPORT_COLUMNS {
            let _ = write!(out, "  {c:>9}");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:<name_w$}", row.name);
            match (&row.status, &row.metrics) {
                (RowStatus::Ok, Some(m)) => {
                    let v = m.values();
                    for x in &v[..5] {
                        let _ = write!(out, "  {x:>9.4}");
                    }
                    let _ = write!(out, "  {:>9.3}", v[5]);
                }
                (RowStatus::Failed { error }, _) => {
                    let _ = write!(out, "  failed: {error}");
                }
                _ => {
                    for _ in 0..6 {
                        let _ = write!(out, "  {:>9}", "n/a");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// Writes `report.csv`, `report.json` and `report.txt` into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            ("report.csv", self.to_csv()?),
            ("report.json", self.to_json()?),
            ("report.txt", self.render_table()),
        ];
        files
            .into_iter()
            .map(|(name, body)| {
                let path = dir.join(name);
                std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
                Ok(path)
            })
            .collect()
    }
}
