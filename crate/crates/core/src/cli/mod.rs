//! Command-line interface. Every subcommand resolves its configuration as
//! built-in defaults < `--config` file < `--set key=value` < flags, writes the
//! result to `resolved_config.toml` in its output directory, and confines its
//! outputs to that directory.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "nc-embed",
    version,
    about = "Noun-compound representations: composition, paraphrase training, neighbors and evaluation"
)]
pub struct Cli {
    /// TOML file whose keys mirror the subcommand's resolved config
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one config key by dotted path, e.g. `train.epochs=10` (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Top-level seed; every stage derives named sub-seeds from it
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, created if missing [default: out]
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a composition function or an LSTM paraphrase encoder
    Train(TrainArgs),
    /// Acquire paraphrases by backtranslation or from co-occurrence data
    #[command(subcommand)]
    Paraphrase(ParaphraseCommand),
    /// Categorized nearest-neighbor report and rare-neighbor curve
    Neighbors(NeighborsArgs),
    /// Binary property prediction from word and compound vectors
    EvalProperty(EvalPropertyArgs),
    /// Multiclass relation classification from compound vectors
    EvalRelation(EvalRelationArgs),
    /// Run a grid of embedding spaces × representations × seeds
    Grid(GridArgs),
    /// Print a model file's kind, dimension and parameter count
    Inspect(InspectArgs),
}

#[derive(Args, Debug, Default)]
pub struct TrainArgs {
    /// Composition function: add, fulladd, matrix or lstm
    #[arg(long)]
    pub kind: Option<String>,
    /// Training objective: compositional or paraphrase
    #[arg(long)]
    pub objective: Option<String>,
    /// Embedding file (word2vec text format)
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Compounds, one `w1<TAB>w2` per line (compositional objective)
    #[arg(long, value_name = "FILE")]
    pub compounds: Option<PathBuf>,
    /// Paraphrase file (paraphrase objective)
    #[arg(long, value_name = "FILE")]
    pub paraphrases: Option<PathBuf>,
    /// Paraphrase file format: cooccurrence or backtranslation
    #[arg(long)]
    pub paraphrase_source: Option<String>,
    /// Compositional distance: mse or cosine
    #[arg(long)]
    pub distance: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Hinge margin of the paraphrase objective
    #[arg(long)]
    pub margin: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum ParaphraseCommand {
    /// Backtranslate compounds through pivot languages and filter the results
    Backtranslate(BacktranslateArgs),
    /// Load co-occurrence paraphrases, keeping those of 3-5 tokens
    LoadCooc(LoadCoocArgs),
}

#[derive(Args, Debug, Default)]
pub struct BacktranslateArgs {
    /// Compounds, one `w1<TAB>w2` per line
    #[arg(long, value_name = "FILE")]
    pub compounds: Option<PathBuf>,
    /// Translation backend: mock or http
    #[arg(long)]
    pub backend: Option<String>,
    /// Mock translation table, `from<TAB>to<TAB>text<TAB>translation` lines
    #[arg(long, value_name = "FILE")]
    pub mock_table: Option<PathBuf>,
    /// HTTP backend config (TOML); credentials come from the env var it names
    #[arg(long, value_name = "FILE")]
    pub http_config: Option<PathBuf>,
    /// Existing backtranslation cache; cached compounds are not re-queried
    #[arg(long, value_name = "FILE")]
    pub cache: Option<PathBuf>,
    /// English vocabulary, one token per line, for the language filter
    #[arg(long, value_name = "FILE")]
    pub english_vocab: Option<PathBuf>,
    /// Comma-separated pivot languages [default: fr,it,es,ro]
    #[arg(long)]
    pub pivots: Option<String>,
    /// Maximum concurrent translation requests
    #[arg(long)]
    pub in_flight: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct LoadCoocArgs {
    /// Co-occurrence paraphrases, `w1<TAB>w2<TAB>paraphrase` lines
    #[arg(long, value_name = "FILE")]
    pub cooc: Option<PathBuf>,
    /// Embedding file whose vocabulary constituents must belong to
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct NeighborsArgs {
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub compounds: Option<PathBuf>,
    /// Composition model; without one the stored compound vectors are used
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Normalize constituent vectors before composing
    #[arg(long)]
    pub normalize_inputs: bool,
    /// Neighbors per target
    #[arg(long)]
    pub k: Option<usize>,
    /// Report file name inside the output directory
    #[arg(long, value_name = "NAME")]
    pub report: Option<String>,
    /// Taxonomy file for the WordNet-similar category
    #[arg(long, value_name = "FILE")]
    pub taxonomy: Option<PathBuf>,
    /// Backtranslation paraphrase sets for the paraphrase category
    #[arg(long, value_name = "FILE")]
    pub backtranslation: Option<PathBuf>,
    /// Target cohort: rare, frequent or all
    #[arg(long)]
    pub cohort: Option<String>,
    #[arg(long)]
    pub cohort_size: Option<usize>,
    /// Comma-separated frequency bin edges for the rare-neighbor curve
    #[arg(long)]
    pub curve_bins: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct EvalPropertyArgs {
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Properties, `item<TAB>property<TAB>1|0` lines
    #[arg(long, value_name = "FILE")]
    pub properties: Option<PathBuf>,
    /// Composition model; without one the stored compound vectors are used
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Normalize constituent vectors before composing
    #[arg(long)]
    pub normalize_inputs: bool,
}

#[derive(Args, Debug, Default)]
pub struct EvalRelationArgs {
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Labeled compounds, `w1<TAB>w2<TAB>fine<TAB>coarse` lines
    #[arg(long, value_name = "FILE")]
    pub relations: Option<PathBuf>,
    /// Composition model; without one the stored compound vectors are used
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Normalize constituent vectors before composing
    #[arg(long)]
    pub normalize_inputs: bool,
    /// Split: random or lexical
    #[arg(long)]
    pub split: Option<String>,
    /// Label granularity: coarse or fine
    #[arg(long)]
    pub granularity: Option<String>,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    /// Grid spec (TOML); `--out` replaces its output_dir, `--seed` its seeds
    #[arg(long, value_name = "FILE")]
    pub spec: PathBuf,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    /// Model file
    pub file: PathBuf,
}

/// Exit status and machine-readable category for an error.
pub fn error_category(e: &Error) -> (u8, &'static str) {
    match e {
        Error::Config(_) => (2, "config"),
        Error::MissingResource(_) => (3, "missing-resource"),
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => (3, "missing-resource"),
        Error::Representation { source, .. } => error_category(source),
        _ => (4, "failure"),
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| Error::Config(format!("bad key `{key}`")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// A TOML literal when it parses as one, otherwise a bare string.
fn parse_value(text: &str) -> toml::Value {
    format!("v = {text}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

/// A comma-separated flag as a TOML array.
fn list_value(text: &str) -> toml::Value {
    toml::Value::Array(
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(parse_value)
            .collect(),
    )
}

fn path_value(p: &std::path::Path) -> toml::Value {
    toml::Value::String(p.to_string_lossy().into_owned())
}

/// Collects config-file, `--set`, `--seed`, `--out` and per-command flag
/// overrides into one table.
fn overlay(cli: &Cli, flags: Vec<(&str, Option<toml::Value>)>, globals: (&str, &str)) -> Result<toml::Table> {
    let mut table = toml::Table::new();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|_| Error::MissingResource(path.clone()))?;
        let parsed: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        merge(&mut table, parsed);
    }
    for s in &cli.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{s}`")))?;
        set_path(&mut table, k.trim(), parse_value(v.trim()))?;
    }
    if let Some(seed) = cli.seed {
        let seed = i64::try_from(seed).map_err(|_| Error::Config("seed must fit in a signed 64-bit integer".into()))?;
        set_path(&mut table, globals.0, toml::Value::Integer(seed))?;
    }
    if let Some(out) = &cli.out {
        set_path(&mut table, globals.1, path_value(out))?;
    }
    for (k, v) in flags {
        if let Some(v) = v {
            set_path(&mut table, k, v)?;
        }
    }
    Ok(table)
}

/// Layers `overlay` over the serialized `default`; unknown keys are errors.
fn resolve<C: Serialize + DeserializeOwned>(default: &C, overlay: &toml::Table) -> Result<C> {
    let mut base = match toml::Value::try_from(default).map_err(|e| Error::Config(e.to_string()))? {
        toml::Value::Table(t) => t,
        _ => return Err(Error::Config("config root must be a table".into())),
    };
    merge(&mut base, overlay.clone());
    toml::Value::Table(base)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string().trim().replace('\n', " ")))
}

pub fn run(cli: Cli) -> Result<()> {
    commands::dispatch(&cli)
}

/// Parses `args`, runs, and maps failures to a one-line
/// `error[category]: detail` message and exit status.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, category) = error_category(&e);
            eprintln!("error[{category}]: {}", e.to_string().replace('\n', " "));
            ExitCode::from(code)
        }
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    main_from(std::env::args_os())
}

/// Every long flag each subcommand accepts, including the global ones.
pub const FLAG_REGISTRY: &[(&str, &[&str])] = &[
    (
        "train",
        &[
            "kind", "objective", "embeddings", "compounds", "paraphrases", "paraphrase-source", "distance", "epochs",
            "learning-rate", "batch-size", "margin",
        ],
    ),
    (
        "paraphrase backtranslate",
        &["compounds", "backend", "mock-table", "http-config", "cache", "english-vocab", "pivots", "in-flight"],
    ),
    ("paraphrase load-cooc", &["cooc", "embeddings"]),
    (
        "neighbors",
        &[
            "embeddings", "compounds", "model", "normalize-inputs", "k", "report", "taxonomy", "backtranslation",
            "cohort", "cohort-size", "curve-bins",
        ],
    ),
    ("eval-property", &["embeddings", "properties", "model", "normalize-inputs"]),
    ("eval-relation", &["embeddings", "relations", "model", "normalize-inputs", "split", "granularity"]),
    ("grid", &["spec"]),
    ("inspect", &[]),
];

pub const GLOBAL_FLAGS: &[&str] = &["config", "set", "seed", "out", "help"];
