//! `driftboost` command-line tool.
//!
//! Settings come from flags, then from an optional `--config` file of
//! `key = value` lines, then from built-in defaults. The output directory
//! falls back to `$DRIFTBOOST_OUT_DIR`, then `driftboost-out`.
//!
//! Failures print one line, `error[<kind>]: <message>`, to stderr. Exit code
//! 2 means a usage problem (bad flags, unknown model, invalid parameter), 1
//! any other failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use driftboost::dataset::{
    load_features_csv, train_test_split, write_csv, Dataset, FeatureSchema, SplitSpec,
    DEFAULT_NOISE_SD,
};
use driftboost::harness::{
    learning_curve, prediction_error, residuals, run_benchmark, validation_curve, BenchmarkConfig,
    DataSource, DiagnosticKind, KeyValueConfig, ModelMetadata, DEFAULT_LEAF_GRID, DEFAULT_OUT_DIR,
    OUT_DIR_ENV,
};
use driftboost::metrics::evaluate;
use driftboost::model::{ModelFile, ModelKind};
use driftboost::rng::derive_seed;
use driftboost::Error;

/// Keys accepted in a config file besides `<model>.<parameter>` entries.
const CONFIG_KEYS: [&str; 12] = [
    "data",
    "schema",
    "synth_n",
    "synth_seed",
    "synth_noise",
    "test_fraction",
    "seed",
    "model",
    "models",
    "label",
    "out_dir",
    "grid",
];

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParam(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

#[derive(Parser, Debug)]
#[command(
    name = "driftboost",
    version,
    about = "Gradient boosted trees and a regression benchmark harness"
)]
struct Cli {
    /// Flat key = value settings file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset in the 18-feature seismic schema.
    Synth(SynthArgs),
    /// Fit one model and save it with a metadata sidecar.
    Train(TrainArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// Score a saved model on labelled data.
    Evaluate(EvaluateArgs),
    /// Fit and score a set of models and write a ranked report.
    Benchmark(BenchmarkArgs),
    /// Emit plot-ready CSV for a saved model.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Debug, Default)]
struct DataArgs {
    /// CSV dataset with a header row.
    #[arg(long)]
    data: Option<PathBuf>,
    /// JSON feature schema for --data (default: the seismic schema; predict uses the model's own).
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Generate this many synthetic rows instead of reading --data.
    #[arg(long)]
    synth_n: Option<usize>,
    /// Seed for the synthetic generator
    #[arg(long)]
    synth_seed: Option<u64>,
    /// Noise standard deviation for synthetic targets
    #[arg(long)]
    synth_noise: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct SplitArgs {
    /// Fraction of rows held out for testing.
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Master seed for the split and the models.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    noise_sd: Option<f64>,
    /// Output CSV (default: <out dir>/synth.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output directory (default: $DRIFTBOOST_OUT_DIR, then driftboost-out)
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Model kind, e.g. gbdt, random_forest, ridge.
    #[arg(long)]
    model: Option<String>,
    /// Hyperparameter override, key=value (repeatable).
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Fit on every row instead of the training partition.
    #[arg(long)]
    no_split: bool,
    /// Model file (default: <out dir>/<model>.model.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output directory (default: $DRIFTBOOST_OUT_DIR, then driftboost-out)
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Model file written by train
    #[arg(long)]
    model_file: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Prediction CSV (default: <out dir>/predictions.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output directory (default: $DRIFTBOOST_OUT_DIR, then driftboost-out)
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Model file written by train
    #[arg(long)]
    model_file: PathBuf,
    /// Dataset to score (default: the data recorded in the model's sidecar).
    #[command(flatten)]
    data: DataArgs,
    /// Score only the held-out rows of the split recorded at training time.
    #[arg(long)]
    holdout: bool,
    /// Also write the metrics as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Comma-separated model kinds, or "all".
    #[arg(long)]
    models: Option<String>,
    /// Hyperparameter override, model.key=value (repeatable).
    #[arg(long = "param", value_name = "MODEL.KEY=VALUE")]
    params: Vec<String>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Dataset label for the report, e.g. BARE, FULL-MASONRY, PILOTIS.
    #[arg(long)]
    label: Option<String>,
    /// Output directory (default: $DRIFTBOOST_OUT_DIR, then driftboost-out)
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    /// Model file written by train
    #[arg(long)]
    model_file: PathBuf,
    /// prediction_error, residuals, learning_curve or validation_curve.
    #[arg(long)]
    kind: String,
    /// Dataset (default: the data recorded in the model's sidecar).
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Leaf counts for validation_curve, comma-separated.
    #[arg(long)]
    grid: Option<String>,
    /// Output CSV (default: <out dir>/<kind>.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output directory (default: $DRIFTBOOST_OUT_DIR, then driftboost-out)
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

struct Settings {
    file: KeyValueConfig,
}

impl Settings {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let file = match path {
            Some(p) => KeyValueConfig::load(p)?,
            None => KeyValueConfig::default(),
        };
        for key in file.keys() {
            let is_model_param = key
                .split_once('.')
                .is_some_and(|(m, _)| ModelKind::from_str(m).is_ok());
            if !CONFIG_KEYS.contains(&key) && !is_model_param {
                return usage(format!("unknown config key '{key}'"));
            }
        }
        Ok(Settings { file })
    }

    /// Flag value, else config value, else `default`.
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(match flag {
            Some(v) => v,
            None => self.file.parsed(key)?.unwrap_or(default),
        })
    }

    fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        Ok(match flag {
            Some(v) => Some(v),
            None => self.file.parsed(key)?,
        })
    }

    fn out_dir(&self, flag: Option<PathBuf>) -> CliResult<PathBuf> {
        if let Some(d) = self.pick_opt(flag, "out_dir")? {
            return Ok(d);
        }
        Ok(std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)))
    }

    /// The data source named by flags or config, if any.
    fn data_source(&self, args: &DataArgs) -> CliResult<Option<DataSource>> {
        let path: Option<PathBuf> = self.pick_opt(args.data.clone(), "data")?;
        let n: Option<usize> = self.pick_opt(args.synth_n, "synth_n")?;
        match (path, n) {
            (Some(_), Some(_)) => {
                usage("give either a CSV dataset (data) or a synthetic size (synth_n), not both")
            }
            (Some(path), None) => Ok(Some(DataSource::Csv {
                path,
                schema: self.pick_opt(args.schema.clone(), "schema")?,
            })),
            (None, Some(n)) => Ok(Some(DataSource::Synth {
                n,
                seed: self.pick(args.synth_seed, "synth_seed", 0)?,
                noise_sd: self.pick(args.synth_noise, "synth_noise", DEFAULT_NOISE_SD)?,
            })),
            (None, None) => Ok(None),
        }
    }

    fn require_data(&self, args: &DataArgs) -> CliResult<DataSource> {
        match self.data_source(args)? {
            Some(d) => Ok(d),
            None => usage("no dataset: pass --data <csv> or --synth-n <rows>"),
        }
    }

    fn split(&self, args: &SplitArgs) -> CliResult<SplitSpec> {
        let fraction = self.pick(
            args.test_fraction,
            "test_fraction",
            SplitSpec::default().test_fraction,
        )?;
        let seed = self.pick(args.seed, "seed", 0)?;
        Ok(SplitSpec::new(fraction, seed)?)
    }

    /// Config-file parameters for `kind`, then flag parameters on top.
    fn model_params(&self, kind: ModelKind, flags: &[(String, String)]) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self
            .file
            .section(kind.id())
            .map(|(k, v)| (k.to_owned(), v.to_owned()))
            .collect();
        out.extend(flags.iter().cloned());
        out
    }
}

fn parse_kind(s: &str) -> CliResult<ModelKind> {
    Ok(ModelKind::from_str(s.trim())?)
}

fn split_kv(s: &str) -> CliResult<(String, String)> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_owned(), v.trim().to_owned())),
        _ => usage(format!("expected KEY=VALUE, got '{s}'")),
    }
}

fn create_parent(path: &Path) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    Ok(())
}

fn cmd_synth(s: &Settings, a: SynthArgs) -> CliResult<()> {
    let n = s.pick(a.n, "synth_n", 5850)?;
    let seed = s.pick(a.seed, "synth_seed", 0)?;
    let noise = s.pick(a.noise_sd, "synth_noise", DEFAULT_NOISE_SD)?;
    let out = match a.out {
        Some(p) => p,
        None => s.out_dir(a.out_dir)?.join("synth.csv"),
    };
    let ds = driftboost::dataset::synth_generate(n, seed, noise)?;
    create_parent(&out)?;
    write_csv(&ds, &out)?;
    println!("wrote {n} rows to {}", out.display());
    Ok(())
}

fn cmd_train(s: &Settings, a: TrainArgs) -> CliResult<()> {
    let kind = match s.pick_opt(a.model.clone(), "model")? {
        Some(m) => parse_kind(&m)?,
        None => return usage("no model: pass --model <kind>"),
    };
    let Some(mut config) = kind.default_config() else {
        return usage(format!("model '{kind}' is not implemented"));
    };
    let flags = a
        .params
        .iter()
        .map(|p| split_kv(p))
        .collect::<CliResult<Vec<_>>>()?;
    for (k, v) in s.model_params(kind, &flags) {
        config = config.with_param(&k, &v)?;
    }
    let source = s.require_data(&a.data)?;
    let split = s.split(&a.split)?;
    let ds = source.load()?;
    let (train, n_test) = if a.no_split {
        (ds, 0)
    } else {
        let (tr, te) = train_test_split(&ds, split)?;
        (tr, te.n_rows())
    };
    let config = config.with_seed(derive_seed(split.seed, kind.index() as u64));
    let start = Instant::now();
    let model = config.fit(&train)?;
    let tt = start.elapsed().as_secs_f64();

    let out = match a.out {
        Some(p) => p,
        None => s.out_dir(a.out_dir)?.join(format!("{kind}.model.json")),
    };
    create_parent(&out)?;
    let file = ModelFile::new(model, train.schema());
    file.save(&out)?;
    let meta = ModelMetadata {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        kind: kind.id().to_owned(),
        schema_hash: file.schema_hash.clone(),
        seed: split.seed,
        split: (!a.no_split).then_some(split),
        n_train: train.n_rows(),
        n_test,
        training_time_s: tt,
        data: source,
    };
    let meta_path = ModelMetadata::sidecar_path(&out);
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Failure::Runtime(e.to_string()))?;
    std::fs::write(&meta_path, text)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", meta_path.display())))?;
    println!(
        "trained {kind} on {} rows in {tt:.3}s -> {}",
        train.n_rows(),
        out.display()
    );
    Ok(())
}

fn load_metadata(model_path: &Path) -> CliResult<Option<ModelMetadata>> {
    let path = ModelMetadata::sidecar_path(model_path);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Failure::Runtime(format!("bad metadata {}: {e}", path.display())))
}

/// Loads a dataset for a saved model, refusing a schema other than the one
/// the model was trained on.
fn load_for_model(file: &ModelFile, source: &DataSource) -> CliResult<Dataset> {
    match source {
        DataSource::Csv { path, schema } => {
            let schema = match schema {
                Some(p) => FeatureSchema::from_json_file(p)?,
                None => file.schema.clone(),
            };
            file.check_schema(&schema)?;
            Ok(driftboost::dataset::load_csv(path, &schema)?)
        }
        synth => {
            let ds = synth.load()?;
            file.check_schema(ds.schema())?;
            Ok(ds)
        }
    }
}

fn data_or_sidecar(
    s: &Settings,
    args: &DataArgs,
    meta: Option<&ModelMetadata>,
) -> CliResult<DataSource> {
    match (s.data_source(args)?, meta) {
        (Some(d), _) => Ok(d),
        (None, Some(m)) => Ok(m.data.clone()),
        (None, None) => usage("no dataset: pass --data <csv> or --synth-n <rows>"),
    }
}

fn cmd_predict(s: &Settings, a: PredictArgs) -> CliResult<()> {
    let file = ModelFile::load(&a.model_file)?;
    let source = s.require_data(&a.data)?;
    let ds = match &source {
        DataSource::Csv { path, schema } => {
            let schema = match schema {
                Some(p) => FeatureSchema::from_json_file(p)?,
                None => file.schema.clone(),
            };
            file.check_schema(&schema)?;
            let (rows, _) = load_features_csv(path, &schema)?;
            let n = rows.len() / schema.len().max(1);
            Dataset::new(schema, rows, vec![0.0; n])?
        }
        synth => load_for_model(&file, synth)?,
    };
    let pred = file.model.predict_dataset(&ds)?;
    let out = match a.out {
        Some(p) => p,
        None => s.out_dir(a.out_dir)?.join("predictions.csv"),
    };
    create_parent(&out)?;
    let mut text = String::from("prediction\n");
    for p in &pred {
        text.push_str(&format!("{p}\n"));
    }
    std::fs::write(&out, text)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", out.display())))?;
    println!("wrote {} predictions to {}", pred.len(), out.display());
    Ok(())
}

fn cmd_evaluate(s: &Settings, a: EvaluateArgs) -> CliResult<()> {
    let file = ModelFile::load(&a.model_file)?;
    let meta = load_metadata(&a.model_file)?;
    let source = data_or_sidecar(s, &a.data, meta.as_ref())?;
    let mut ds = load_for_model(&file, &source)?;
    if a.holdout {
        let Some(split) = meta.as_ref().and_then(|m| m.split) else {
            return usage("--holdout needs a model trained with a split (sidecar metadata)");
        };
        ds = train_test_split(&ds, split)?.1;
    }
    let pred = file.model.predict_dataset(&ds)?;
    let tt = meta.as_ref().map_or(0.0, |m| m.training_time_s);
    let report = evaluate(&pred, ds.target(), file.model.kind().display_name(), tt)?;
    println!(
        "model={} n={} r2={} mae={} mse={} rmse={} mape={}",
        file.model.kind(),
        report.n,
        report.r2,
        report.mae,
        report.mse,
        report.rmse,
        report.mape
    );
    if let Some(out) = a.out {
        create_parent(&out)?;
        let text =
            serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.to_string()))?;
        std::fs::write(&out, text)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", out.display())))?;
    }
    Ok(())
}

fn cmd_benchmark(s: &Settings, a: BenchmarkArgs) -> CliResult<()> {
    let list = s.pick(a.models.clone(), "models", "all".to_owned())?;
    let kinds: Vec<ModelKind> = if list.trim() == "all" {
        ModelKind::ALL.to_vec()
    } else {
        list.split(',').map(parse_kind).collect::<CliResult<_>>()?
    };
    let mut overrides = Vec::new();
    for kind in &kinds {
        for (k, v) in s.model_params(*kind, &[]) {
            overrides.push((*kind, k, v));
        }
    }
    for p in &a.params {
        let (key, value) = split_kv(p)?;
        let Some((model, param)) = key.split_once('.') else {
            return usage(format!(
                "benchmark parameters look like model.key=value, got '{p}'"
            ));
        };
        overrides.push((parse_kind(model)?, param.to_owned(), value));
    }
    let models = BenchmarkConfig::resolve_models(&kinds, &overrides)?;
    let data = s.require_data(&a.data)?;
    let split = s.split(&a.split)?;
    let default_label = match &data {
        DataSource::Synth { .. } => "SYNTHETIC".to_owned(),
        DataSource::Csv { path, .. } => path
            .file_stem()
            .map_or("DATA".to_owned(), |s| s.to_string_lossy().into_owned()),
    };
    let cfg = BenchmarkConfig {
        data,
        split,
        models,
        seed: split.seed,
        label: s.pick(a.label, "label", default_label)?,
    };
    let out_dir = s.out_dir(a.out_dir)?;
    let report = run_benchmark(&cfg)?;
    let written = report.write_all(&out_dir)?;
    print!("{}", report.render_table());
    for p in &written {
        println!("wrote {}", p.display());
    }
    if report.all_failed() {
        return Err(Failure::Runtime(
            "every model failed; see the report for details".into(),
        ));
    }
    Ok(())
}

fn cmd_diagnose(s: &Settings, a: DiagnoseArgs) -> CliResult<()> {
    let kind = DiagnosticKind::from_str(&a.kind)?;
    let file = ModelFile::load(&a.model_file)?;
    let meta = load_metadata(&a.model_file)?;
    let source = data_or_sidecar(s, &a.data, meta.as_ref())?;
    let ds = load_for_model(&file, &source)?;
    let split = match (
        a.split.test_fraction,
        a.split.seed,
        meta.as_ref().and_then(|m| m.split),
    ) {
        (None, None, Some(recorded)) => recorded,
        _ => s.split(&a.split)?,
    };
    let (train, test) = train_test_split(&ds, split)?;
    let model = &file.model;
    let series = match kind {
        DiagnosticKind::PredictionError => prediction_error(model, &test)?,
        DiagnosticKind::Residuals => residuals(model, &test)?,
        DiagnosticKind::LearningCurve => learning_curve(model, &train, &test)?,
        DiagnosticKind::ValidationCurve => {
            let grid: Vec<usize> = match s.pick_opt(a.grid, "grid")? {
                Some(g) => g
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse()
                            .map_err(|_| Failure::Usage(format!("bad grid value '{v}'")))
                    })
                    .collect::<CliResult<_>>()?,
                None => DEFAULT_LEAF_GRID.to_vec(),
            };
            validation_curve(model, &train, &test, &grid)?
        }
    };
    let out = match a.out {
        Some(p) => p,
        None => s.out_dir(a.out_dir)?.join(format!("{kind}.csv")),
    };
    create_parent(&out)?;
    series.write_csv(&out)?;
    println!(
        "wrote {} rows of {kind} to {}",
        series.rows.len(),
        out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let settings = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Synth(a) => cmd_synth(&settings, a),
        Command::Train(a) => cmd_train(&settings, a),
        Command::Predict(a) => cmd_predict(&settings, a),
        Command::Evaluate(a) => cmd_evaluate(&settings, a),
        Command::Benchmark(a) => cmd_benchmark(&settings, a),
        Command::Diagnose(a) => cmd_diagnose(&settings, a),
    }
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error[usage]: {}", one_line(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error[usage]: {}", one_line(&m));
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error[runtime]: {}", one_line(&m));
            ExitCode::from(1)
        }
    }
}
