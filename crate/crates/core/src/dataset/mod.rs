//! Feature/target tables.
//!
//! A [`Dataset`] is an immutable row-major matrix of finite reals with a
//! [`FeatureSchema`] naming its columns, plus a target vector. The canonical
//! schema is the 18-feature seismic-drift layout shipped in
//! `schemas/seismic18.json`: four structural parameters of the building and
//! fourteen ground-motion intensity measures, predicting MIDR (maximum
//! interstory drift ratio).

mod csv_io;
mod synth;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::Rng;

pub use csv_io::{load_csv, load_features_csv, write_csv};
pub use synth::{planted_midr, synth_generate, DEFAULT_NOISE_SD, TARGET_FLOOR};

const SEISMIC_SCHEMA_JSON: &str = include_str!("../../schemas/seismic18.json");

pub(crate) fn seismic_ref() -> &'static FeatureSchema {
    static SCHEMA: std::sync::OnceLock<FeatureSchema> = std::sync::OnceLock::new();
    SCHEMA.get_or_init(|| {
        serde_json::from_str(SEISMIC_SCHEMA_JSON).expect("bundled schema is valid JSON")
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub unit: String,
    /// Closed physical interval the feature is expected to fall in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub name: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureSpec>,
    pub target: TargetSpec,
}

impl FeatureSchema {
    /// The 18-feature seismic schema with target `MIDR`.
    pub fn seismic() -> Self {
        seismic_ref().clone()
    }

    /// `d` unranged features named `x0..x{d-1}` and target `y`.
    pub fn generic(d: usize) -> Self {
        FeatureSchema {
            features: (0..d)
                .map(|j| FeatureSpec {
                    name: format!("x{j}"),
                    unit: String::new(),
                    range: None,
                })
                .collect(),
            target: TargetSpec {
                name: "y".into(),
                unit: String::new(),
            },
        }
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: FeatureSchema = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::SchemaMismatch("schema has no features".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for f in &self.features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::SchemaMismatch(format!(
                    "duplicate feature name {}",
                    f.name
                )));
            }
            if let Some([lo, hi]) = f.range {
                if !(lo <= hi) {
                    return Err(Error::SchemaMismatch(format!(
                        "feature {} has range [{lo}, {hi}] with lower > upper",
                        f.name
                    )));
                }
            }
        }
        if seen.contains(self.target.name.as_str()) {
            return Err(Error::SchemaMismatch(format!(
                "target name {} collides with a feature",
                self.target.name
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Hex SHA-256 of the schema's canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("schema serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Immutable feature matrix plus target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: FeatureSchema,
    rows: Vec<f64>,
    target: Vec<f64>,
}

impl Dataset {
    /// Build from a row-major buffer of `target.len()` rows.
    pub fn new(schema: FeatureSchema, rows: Vec<f64>, target: Vec<f64>) -> Result<Self> {
        schema.validate()?;
        let n = target.len();
        let d = schema.len();
        if n == 0 {
            return Err(Error::Empty("dataset has no rows".into()));
        }
        Error::check_len(n * d, rows.len())?;
        if let Some(pos) = rows.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "row {}, column {}",
                pos / d,
                schema.features[pos % d].name
            )));
        }
        if let Some(i) = target.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "row {i}, column {}",
                schema.target.name
            )));
        }
        Ok(Dataset {
            schema,
            rows,
            target,
        })
    }

    pub fn from_rows(schema: FeatureSchema, rows: &[Vec<f64>], target: Vec<f64>) -> Result<Self> {
        let d = schema.len();
        let mut flat = Vec::with_capacity(rows.len() * d);
        for r in rows {
            Error::check_len(d, r.len())?;
            flat.extend_from_slice(r);
        }
        Error::check_len(target.len(), rows.len())?;
        Dataset::new(schema, flat, target)
    }

    /// Single-feature dataset with a generic schema; handy for small examples.
    pub fn from_column(x: &[f64], y: &[f64]) -> Result<Self> {
        Error::check_len(x.len(), y.len())?;
        Dataset::new(FeatureSchema::generic(1), x.to_vec(), y.to_vec())
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_features();
        &self.rows[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks_exact(self.n_features())
    }

    pub fn raw_rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.rows[i * self.n_features() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Column-major copy of the feature matrix.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.n_features()).map(|j| self.column(j)).collect()
    }

    /// New dataset holding `indices` in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let d = self.n_features();
        let mut rows = Vec::with_capacity(indices.len() * d);
        let mut target = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n_rows() {
                return Err(Error::InvalidParam(format!("row index {i} out of range")));
            }
            rows.extend_from_slice(self.row(i));
            target.push(self.target[i]);
        }
        Dataset::new(self.schema.clone(), rows, target)
    }

    /// Same features, replaced target.
    pub fn with_target(&self, target: Vec<f64>) -> Result<Self> {
        Error::check_len(self.n_rows(), target.len())?;
        Dataset::new(self.schema.clone(), self.rows.clone(), target)
    }
}

/// One cell outside its feature's declared physical range.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeWarning {
    pub row: usize,
    pub feature: String,
    pub value: f64,
    pub range: [f64; 2],
}

impl std::fmt::Display for RangeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "row {} {} = {} outside [{}, {}]",
            self.row, self.feature, self.value, self.range[0], self.range[1]
        )
    }
}

/// Advisory scan: one warning per cell outside its schema range.
pub fn validate_ranges(ds: &Dataset) -> Vec<RangeWarning> {
    let mut out = Vec::new();
    for (i, row) in ds.rows().enumerate() {
        for (spec, &v) in ds.schema.features.iter().zip(row) {
            if let Some([lo, hi]) = spec.range {
                if v < lo || v > hi {
                    out.push(RangeWarning {
                        row: i,
                        feature: spec.name.clone(),
                        value: v,
                        range: [lo, hi],
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64) -> Result<Self> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::InvalidParam(format!(
                "test_fraction must lie in (0, 1), got {test_fraction}"
            )));
        }
        Ok(SplitSpec {
            test_fraction,
            seed,
        })
    }

    /// Test-set size for `n` rows: `round(n * fraction)` clamped to `[1, n-1]`.
    pub fn test_size(&self, n: usize) -> usize {
        let raw = (n as f64 * self.test_fraction).round() as usize;
        raw.clamp(1, n.saturating_sub(1).max(1))
    }

    /// Row indices `(train, test)`, each ascending.
    pub fn partition(&self, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if n < 2 {
            return Err(Error::InvalidDataset(format!(
                "train/test split needs at least 2 rows, got {n}"
            )));
        }
        SplitSpec::new(self.test_fraction, self.seed)?;
        let k = self.test_size(n);
        let mut rng = Rng::new(self.seed);
        let mut test = rng.sample_without_replacement(n, k);
        test.sort_unstable();
        let mut is_test = vec![false; n];
        for &i in &test {
            is_test[i] = true;
        }
        let train = (0..n).filter(|&i| !is_test[i]).collect();
        Ok((train, test))
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Seeded disjoint partition into `(train, test)`; both keep original row order.
pub fn train_test_split(ds: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = spec.partition(ds.n_rows())?;
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: f64,
    /// Population standard deviation (divides by n).
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

/// Per-feature mean, population standard deviation, min and max.
pub fn feature_stats(ds: &Dataset) -> Vec<FeatureStats> {
    let n = ds.n_rows() as f64;
    (0..ds.n_features())
        .map(|j| {
            let col = ds.column(j);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let (min, max) = col
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            FeatureStats {
                mean,
                sd: var.sqrt(),
                min,
                max,
            }
        })
        .collect()
}
