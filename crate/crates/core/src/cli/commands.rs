use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{list_value, overlay, path_value, resolve, Cli, Command, ParaphraseCommand};
use crate::compose::{read_model_file, write_model_file, ModelKind};
use crate::embeddings::{open_embeddings, read_compounds, EmbeddingSpace, NounCompound};
use crate::error::{Error, Result};
use crate::eval::{
    property_eval, read_labeled_compounds, read_properties, relation_eval, write_eval_report, EvalConfig, EvalResult,
    RelationConfig, VectorProvider,
};
use crate::neighbors::{
    neighbor_report, rare_curve, select_cohorts, write_report, CandidatePool, CategoryResources, Cohort, Taxonomy,
};
use crate::paraphrase::{
    backtranslate_all, filter_paraphrases, load_cooccurrence, paraphrase_stats, read_cache, read_sets, write_cache,
    write_sets, HttpBackend, HttpBackendConfig, MockBackend, ParaphraseSet, ParaphraseSource, TranslationBackend,
    VocabularyRatio, DEFAULT_PIVOTS,
};
use crate::pipeline::{run_grid, DsmGridSpec, Representation};
use crate::seeds::sub_seed;
use crate::train::{
    batch_loss, compositional_examples, paraphrase_separation, split_compounds, train_compositional,
    train_paraphrase, Batch, Objective, ParaphrasePair, SplitRatios, TrainConfig,
};

type Flags = Vec<(&'static str, Option<toml::Value>)>;

fn s(v: &Option<String>) -> Option<toml::Value> {
    v.as_ref().map(|x| toml::Value::String(x.clone()))
}

fn p(v: &Option<PathBuf>) -> Option<toml::Value> {
    v.as_deref().map(path_value)
}

fn n(v: Option<usize>) -> Option<toml::Value> {
    v.map(|x| toml::Value::Integer(x as i64))
}

fn f(v: Option<f64>) -> Option<toml::Value> {
    v.map(toml::Value::Float)
}

fn b(v: bool) -> Option<toml::Value> {
    v.then_some(toml::Value::Boolean(true))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|_| Error::MissingResource(path.to_path_buf()))
}

fn require<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    value.as_deref().ok_or_else(|| Error::Config(format!("`{key}` is required")))
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Creates the output directory and records the resolved config in it.
fn prepare_out<C: Serialize>(out: &Path, config: &C) -> Result<()> {
    fs::create_dir_all(out)?;
    let text = toml::to_string(config).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(out.join("resolved_config.toml"), text)?;
    Ok(())
}

pub(super) fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => {
            let flags: Flags = vec![
                ("kind", s(&a.kind)),
                ("train.objective", s(&a.objective)),
                ("embeddings", p(&a.embeddings)),
                ("compounds", p(&a.compounds)),
                ("paraphrases", p(&a.paraphrases)),
                ("paraphrase_source", s(&a.paraphrase_source)),
                ("train.distance", s(&a.distance)),
                ("train.epochs", n(a.epochs)),
                ("train.learning_rate", f(a.learning_rate)),
                ("train.batch_size", n(a.batch_size)),
                ("train.margin", f(a.margin)),
            ];
            let table = overlay(cli, flags, ("seed", "out"))?;
            let paraphrase = table
                .get("train")
                .and_then(|t| t.get("objective"))
                .and_then(toml::Value::as_str)
                == Some("paraphrase");
            let default = if paraphrase { TrainCommand::paraphrase() } else { TrainCommand::default() };
            train(resolve(&default, &table)?)
        }
        Command::Paraphrase(ParaphraseCommand::Backtranslate(a)) => {
            let flags: Flags = vec![
                ("compounds", p(&a.compounds)),
                ("backend", s(&a.backend)),
                ("mock_table", p(&a.mock_table)),
                ("http_config", p(&a.http_config)),
                ("cache", p(&a.cache)),
                ("english_vocab", p(&a.english_vocab)),
                ("pivots", a.pivots.as_deref().map(list_value)),
                ("in_flight", n(a.in_flight)),
            ];
            backtranslate(resolve(&BacktranslateCommand::default(), &overlay(cli, flags, ("seed", "out"))?)?)
        }
        Command::Paraphrase(ParaphraseCommand::LoadCooc(a)) => {
            let flags: Flags = vec![("cooc", p(&a.cooc)), ("embeddings", p(&a.embeddings))];
            load_cooc(resolve(&LoadCoocCommand::default(), &overlay(cli, flags, ("seed", "out"))?)?)
        }
        Command::Neighbors(a) => {
            let flags: Flags = vec![
                ("embeddings", p(&a.embeddings)),
                ("compounds", p(&a.compounds)),
                ("model", p(&a.model)),
                ("normalize_inputs", b(a.normalize_inputs)),
                ("k", n(a.k)),
                ("report", s(&a.report)),
                ("taxonomy", p(&a.taxonomy)),
                ("backtranslation", p(&a.backtranslation)),
                ("cohort", s(&a.cohort)),
                ("cohort_size", n(a.cohort_size)),
                ("curve_bins", a.curve_bins.as_deref().map(list_value)),
            ];
            neighbors(resolve(&NeighborsCommand::default(), &overlay(cli, flags, ("seed", "out"))?)?)
        }
        Command::EvalProperty(a) => {
            let flags: Flags = vec![
                ("embeddings", p(&a.embeddings)),
                ("properties", p(&a.properties)),
                ("model", p(&a.model)),
                ("normalize_inputs", b(a.normalize_inputs)),
            ];
            eval_property(resolve(&EvalPropertyCommand::default(), &overlay(cli, flags, ("seed", "out"))?)?)
        }
        Command::EvalRelation(a) => {
            let flags: Flags = vec![
                ("embeddings", p(&a.embeddings)),
                ("relations", p(&a.relations)),
                ("model", p(&a.model)),
                ("normalize_inputs", b(a.normalize_inputs)),
                ("relation.split", s(&a.split)),
                ("relation.granularity", s(&a.granularity)),
            ];
            eval_relation(resolve(&EvalRelationCommand::default(), &overlay(cli, flags, ("seed", "out"))?)?)
        }
        Command::Grid(a) => grid(cli, &a.spec),
        Command::Inspect(a) => inspect(&a.file),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainCommand {
    seed: u64,
    out: PathBuf,
    kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embeddings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    compounds: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    paraphrases: Option<PathBuf>,
    paraphrase_source: ParaphraseSource,
    train: TrainConfig,
}

impl Default for TrainCommand {
    fn default() -> Self {
        TrainCommand {
            seed: 0,
            out: default_out(),
            kind: ModelKind::FullAdd,
            embeddings: None,
            compounds: None,
            paraphrases: None,
            paraphrase_source: ParaphraseSource::Cooccurrence,
            train: TrainConfig::compositional(),
        }
    }
}

impl TrainCommand {
    fn paraphrase() -> Self {
        TrainCommand {
            kind: ModelKind::Lstm,
            train: TrainConfig::paraphrase(),
            ..TrainCommand::default()
        }
    }
}

fn paraphrase_sets(path: &Path, source: ParaphraseSource, space: &EmbeddingSpace) -> Result<BTreeMap<NounCompound, ParaphraseSet>> {
    let file = open(path)?;
    match source {
        ParaphraseSource::Cooccurrence => Ok(load_cooccurrence(file, &|w| space.contains(w))?.sets),
        ParaphraseSource::Backtranslation => read_sets(file),
    }
}

fn train(mut cfg: TrainCommand) -> Result<()> {
    cfg.train.seed = cfg.seed;
    cfg.train.validate()?;
    let space = open_embeddings(require(&cfg.embeddings, "embeddings")?, false)?;
    prepare_out(&cfg.out, &cfg)?;
    let split_seed = sub_seed(cfg.seed, "split");
    let mut summary = vec![("kind", cfg.kind.to_string()), ("objective", format!("{:?}", cfg.train.objective).to_lowercase())];
    let trained = match cfg.train.objective {
        Objective::Compositional => {
            let compounds = read_compounds(open(require(&cfg.compounds, "compounds")?)?, Some(&space))?;
            let (tr, va, te) = split_compounds(&compounds, SplitRatios::DEFAULT, split_seed)?;
            let trained = train_compositional(&space, &tr, &va, cfg.kind, &cfg.train)?;
            let (test, _) = compositional_examples(&space, &te, cfg.train.normalize_inputs);
            if !test.is_empty() {
                let loss = batch_loss(&trained.model, &Batch::Compositional(test), &cfg.train)?;
                summary.push(("test_loss", format!("{loss:.10}")));
            }
            trained
        }
        Objective::Paraphrase => {
            if cfg.kind != ModelKind::Lstm {
                return Err(Error::Config(format!(
                    "the paraphrase objective trains an lstm encoder, not {}",
                    cfg.kind
                )));
            }
            let sets = paraphrase_sets(require(&cfg.paraphrases, "paraphrases")?, cfg.paraphrase_source, &space)?;
            let keys: Vec<NounCompound> = sets.keys().cloned().collect();
            let (tr, va, te) = split_compounds(&keys, SplitRatios::DEFAULT, split_seed)?;
            let pairs = |ks: &[NounCompound]| -> Vec<ParaphrasePair> {
                ks.iter().flat_map(|k| sets[k].pairs()).collect()
            };
            let trained = train_paraphrase(&space, &pairs(&tr), &pairs(&va), &cfg.train)?;
            let test = pairs(&te);
            if let Ok(sep) = paraphrase_separation(&trained.model, &space, &test, &cfg.train, sub_seed(cfg.seed, "test")) {
                summary.push(("test_ordered_fraction", format!("{:.6}", sep.ordered_fraction)));
                summary.push(("test_loss", format!("{:.10}", sep.mean_loss)));
            }
            trained
        }
    };
    if let Some(e) = trained.history.selected_epoch {
        summary.push(("selected_epoch", (e + 1).to_string()));
    }
    summary.push(("excluded", trained.excluded.to_string()));
    write_model_file(&trained.model, &cfg.out.join("model.nccm"))?;
    fs::write(
        cfg.out.join("history.tsv"),
        format!("epoch\ttrain_loss\tvalidation_loss\n{}", trained.history.to_log()),
    )?;
    write_pairs(&cfg.out.join("summary.tsv"), &summary)?;
    println!("wrote {}", cfg.out.join("model.nccm").display());
    Ok(())
}

fn write_pairs(path: &Path, rows: &[(&str, String)]) -> Result<()> {
    let mut out = String::from("key\tvalue\n");
    for (k, v) in rows {
        out.push_str(&format!("{k}\t{v}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BackendKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BacktranslateCommand {
    seed: u64,
    out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    compounds: Option<PathBuf>,
    backend: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mock_table: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    http_config: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cache: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    english_vocab: Option<PathBuf>,
    /// Share of in-vocabulary tokens for a candidate to count as English.
    english_threshold: f64,
    pivots: Vec<String>,
    in_flight: usize,
}

impl Default for BacktranslateCommand {
    fn default() -> Self {
        BacktranslateCommand {
            seed: 0,
            out: default_out(),
            compounds: None,
            backend: BackendKind::Mock,
            mock_table: None,
            http_config: None,
            cache: None,
            english_vocab: None,
            english_threshold: 0.5,
            pivots: DEFAULT_PIVOTS.iter().map(|s| s.to_string()).collect(),
            in_flight: 4,
        }
    }
}

fn make_backend(cfg: &BacktranslateCommand) -> Result<Box<dyn TranslationBackend>> {
    Ok(match cfg.backend {
        BackendKind::Mock => Box::new(MockBackend::from_reader(open(require(&cfg.mock_table, "mock_table")?)?)?),
        BackendKind::Http => {
            let path = require(&cfg.http_config, "http_config")?;
            let text = fs::read_to_string(path).map_err(|_| Error::MissingResource(path.to_path_buf()))?;
            let config: HttpBackendConfig =
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            Box::new(HttpBackend::new(config)?)
        }
    })
}

fn read_vocabulary(path: &Path) -> Result<Vec<String>> {
    let mut words = Vec::new();
    for line in BufReader::new(open(path)?).lines() {
        let line = line?;
        let w = line.trim();
        if !w.is_empty() {
            words.push(w.to_string());
        }
    }
    Ok(words)
}

fn backtranslate(cfg: BacktranslateCommand) -> Result<()> {
    if cfg.pivots.is_empty() || cfg.in_flight == 0 {
        return Err(Error::Config("need at least one pivot and in_flight > 0".into()));
    }
    let compounds = read_compounds(open(require(&cfg.compounds, "compounds")?)?, None)?;
    let langid = VocabularyRatio::new(read_vocabulary(require(&cfg.english_vocab, "english_vocab")?)?)
        .with_threshold(cfg.english_threshold);
    let mut cache = match &cfg.cache {
        Some(path) => read_cache(open(path)?)?,
        None => BTreeMap::new(),
    };
    let pending: Vec<NounCompound> = compounds.iter().filter(|nc| !cache.contains_key(*nc)).cloned().collect();
    prepare_out(&cfg.out, &cfg)?;
    let mut failed = 0;
    if !pending.is_empty() {
        let backend = make_backend(&cfg)?;
        let pivots: Vec<&str> = cfg.pivots.iter().map(String::as_str).collect();
        for (nc, outcome) in backtranslate_all(&pending, backend.as_ref(), &pivots, cfg.in_flight)? {
            match outcome {
                Ok(cands) => {
                    cache.insert(nc, cands);
                }
                Err(e) => {
                    log::warn!("skipping {nc}: {e}");
                    failed += 1;
                }
            }
        }
    }
    if failed > 0 && failed == compounds.len() {
        return Err(Error::Backend(format!("backtranslation failed for all {failed} compounds")));
    }
    let entries: Vec<(NounCompound, Vec<_>)> = compounds
        .iter()
        .filter_map(|nc| cache.get(nc).map(|c| (nc.clone(), c.clone())))
        .collect();
    write_cache(&entries, File::create(cfg.out.join("backtranslation_cache.tsv"))?)?;
    let sets: Vec<ParaphraseSet> = entries
        .iter()
        .map(|(nc, cands)| {
            let raw: Vec<&str> = cands.iter().map(|c| c.text.as_str()).collect();
            filter_paraphrases(nc, &raw, &langid)
        })
        .collect();
    write_sets(&sets, File::create(cfg.out.join("paraphrases.tsv"))?)?;
    let stats = paraphrase_stats(&sets)?;
    write_pairs(
        &cfg.out.join("stats.tsv"),
        &[
            ("compounds", sets.len().to_string()),
            ("failed", failed.to_string()),
            ("total", stats.total.to_string()),
            ("mean_per_compound", format!("{:.6}", stats.mean_per_compound)),
            ("filtered_fraction", format!("{:.6}", stats.filtered_fraction)),
        ],
    )?;
    println!(
        "{} compounds, {} paraphrases ({} failed)",
        sets.len(),
        stats.total,
        failed
    );
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadCoocCommand {
    seed: u64,
    out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cooc: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embeddings: Option<PathBuf>,
}

impl Default for LoadCoocCommand {
    fn default() -> Self {
        LoadCoocCommand {
            seed: 0,
            out: default_out(),
            cooc: None,
            embeddings: None,
        }
    }
}

fn load_cooc(cfg: LoadCoocCommand) -> Result<()> {
    let file = open(require(&cfg.cooc, "cooc")?)?;
    let space = cfg.embeddings.as_deref().map(|p| open_embeddings(p, false)).transpose()?;
    let load = match &space {
        Some(s) => load_cooccurrence(file, &|w| s.contains(w))?,
        None => load_cooccurrence(file, &|_| true)?,
    };
    prepare_out(&cfg.out, &cfg)?;
    write_sets(load.sets.values(), File::create(cfg.out.join("paraphrases.tsv"))?)?;
    let stats = paraphrase_stats(load.sets.values())?;
    write_pairs(
        &cfg.out.join("stats.tsv"),
        &[
            ("compounds", load.sets.len().to_string()),
            ("total", stats.total.to_string()),
            ("mean_per_compound", format!("{:.6}", stats.mean_per_compound)),
            ("rejected_length", load.rejected_length.to_string()),
            ("rejected_vocabulary", load.rejected_vocabulary.to_string()),
        ],
    )?;
    println!("{} compounds, {} paraphrases", load.sets.len(), stats.total);
    Ok(())
}

/// Compound vectors from a composition model when given, otherwise the
/// stored distributional vectors.
fn provider(space: Arc<EmbeddingSpace>, model: &Option<PathBuf>, normalize: bool) -> Result<Representation> {
    Ok(match model {
        Some(path) => {
            let model = read_model_file(path, None)?;
            if model.dim() != space.dim() {
                return Err(Error::DimensionMismatch {
                    expected: space.dim(),
                    found: model.dim(),
                });
            }
            Representation::Composed { model, space, normalize }
        }
        None => Representation::Distributional(space),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NeighborsCommand {
    seed: u64,
    out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embeddings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    compounds: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model: Option<PathBuf>,
    normalize_inputs: bool,
    k: usize,
    report: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    taxonomy: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    backtranslation: Option<PathBuf>,
    cohort: Cohort,
    cohort_size: usize,
    rare_threshold: u64,
    similarity_threshold: f64,
    curve_bins: Vec<u64>,
}

impl Default for NeighborsCommand {
    fn default() -> Self {
        NeighborsCommand {
            seed: 0,
            out: default_out(),
            embeddings: None,
            compounds: None,
            model: None,
            normalize_inputs: false,
            k: 10,
            report: "neighbors.tsv".into(),
            taxonomy: None,
            backtranslation: None,
            cohort: Cohort::All,
            cohort_size: 100,
            rare_threshold: 10,
            similarity_threshold: 0.25,
            curve_bins: vec![0, 10, 100, 1_000, 10_000, 100_000, 1_000_000],
        }
    }
}

fn neighbors(cfg: NeighborsCommand) -> Result<()> {
    let name = Path::new(&cfg.report);
    if cfg.report.is_empty() || name.components().count() != 1 || name.file_name().is_none() {
        return Err(Error::Config(format!("report must be a plain file name, got `{}`", cfg.report)));
    }
    let space = Arc::new(open_embeddings(require(&cfg.embeddings, "embeddings")?, true)?);
    let compounds = read_compounds(open(require(&cfg.compounds, "compounds")?)?, Some(&space))?;
    let taxonomy = cfg.taxonomy.as_deref().map(|p| Taxonomy::read(open(p)?)).transpose()?;
    let backtranslation: Option<HashMap<String, ParaphraseSet>> = cfg
        .backtranslation
        .as_deref()
        .map(|p| -> Result<_> {
            Ok(read_sets(open(p)?)?
                .into_iter()
                .map(|(nc, set)| (nc.surface().to_string(), set))
                .collect())
        })
        .transpose()?;
    let provider = provider(space.clone(), &cfg.model, cfg.normalize_inputs)?;
    prepare_out(&cfg.out, &cfg)?;

    let targets: Vec<(NounCompound, Vec<f64>)> = compounds
        .iter()
        .filter_map(|nc| provider.compound_vector(nc).map(|v| (nc.clone(), v)))
        .collect();
    if targets.is_empty() {
        return Err(Error::Evaluation("no compound can be embedded".into()));
    }
    let mut pool = CandidatePool::words_of(&space);
    for (nc, v) in &targets {
        pool.push(nc.surface(), v);
    }
    let chosen: Vec<(NounCompound, Vec<f64>)> = match cfg.cohort {
        Cohort::All => targets.clone(),
        cohort => {
            let ncs: Vec<NounCompound> = targets.iter().map(|(nc, _)| nc.clone()).collect();
            let (rare, frequent) = select_cohorts(&ncs, cfg.cohort_size);
            let members = if cohort == Cohort::Rare { rare } else { frequent };
            members
                .into_iter()
                .filter_map(|nc| targets.iter().find(|(t, _)| *t == nc).cloned())
                .collect()
        }
    };
    let resources = CategoryResources {
        frequencies: space.frequencies(),
        backtranslation: backtranslation.as_ref(),
        taxonomy: taxonomy.as_ref(),
        rare_threshold: cfg.rare_threshold,
        similarity_threshold: cfg.similarity_threshold,
    };
    let report = neighbor_report(&chosen, &pool, cfg.k, &resources, cfg.cohort)?;
    write_report(&report, File::create(cfg.out.join(&cfg.report))?)?;

    let curve = rare_curve(&space, &compounds, &cfg.curve_bins, cfg.rare_threshold, cfg.k)?;
    let mut text = String::from("center\tpercent\tcompounds\n");
    for pt in &curve {
        text.push_str(&format!("{}\t{:.6}\t{}\n", pt.center, pt.percent, pt.compounds));
    }
    fs::write(cfg.out.join("rare_curve.tsv"), text)?;
    for (cat, pct) in &report.distribution {
        println!("{cat}\t{pct:.2}");
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalPropertyCommand {
    seed: u64,
    out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embeddings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    properties: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model: Option<PathBuf>,
    normalize_inputs: bool,
    eval: EvalConfig,
}

impl Default for EvalPropertyCommand {
    fn default() -> Self {
        EvalPropertyCommand {
            seed: 0,
            out: default_out(),
            embeddings: None,
            properties: None,
            model: None,
            normalize_inputs: false,
            eval: EvalConfig::default(),
        }
    }
}

fn summary_line(r: &EvalResult) -> String {
    format!(
        "{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}\n",
        r.name, r.metrics.precision, r.metrics.recall, r.metrics.f1, r.test_size, r.unavailable, r.dropped
    )
}

const SUMMARY_HEADER: &str = "name\tprecision\trecall\tf1\ttest_size\tunavailable\tdropped\n";

fn eval_property(mut cfg: EvalPropertyCommand) -> Result<()> {
    cfg.eval.seed = cfg.seed;
    let space = Arc::new(open_embeddings(require(&cfg.embeddings, "embeddings")?, false)?);
    let datasets = read_properties(open(require(&cfg.properties, "properties")?)?)?;
    let provider = provider(space.clone(), &cfg.model, cfg.normalize_inputs)?;
    prepare_out(&cfg.out, &cfg)?;
    let results = property_eval(&space, &provider, &datasets, &cfg.eval)?;
    let mut summary = String::from(SUMMARY_HEADER);
    for r in &results {
        let file = format!("property_{}.tsv", r.name.replace(|c: char| !c.is_alphanumeric() && c != '-', "_"));
        write_eval_report(r, File::create(cfg.out.join(file))?)?;
        summary.push_str(&summary_line(r));
    }
    fs::write(cfg.out.join("summary.tsv"), &summary)?;
    print!("{summary}");
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalRelationCommand {
    seed: u64,
    out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embeddings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relations: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model: Option<PathBuf>,
    normalize_inputs: bool,
    relation: RelationConfig,
    eval: EvalConfig,
}

impl Default for EvalRelationCommand {
    fn default() -> Self {
        EvalRelationCommand {
            seed: 0,
            out: default_out(),
            embeddings: None,
            relations: None,
            model: None,
            normalize_inputs: false,
            relation: RelationConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

fn eval_relation(mut cfg: EvalRelationCommand) -> Result<()> {
    cfg.eval.seed = cfg.seed;
    let space = Arc::new(open_embeddings(require(&cfg.embeddings, "embeddings")?, false)?);
    let data = read_labeled_compounds(open(require(&cfg.relations, "relations")?)?)?;
    let provider = provider(space, &cfg.model, cfg.normalize_inputs)?;
    prepare_out(&cfg.out, &cfg)?;
    let result = relation_eval(&provider, &data, &cfg.relation, &cfg.eval)?;
    write_eval_report(&result, File::create(cfg.out.join("relation_report.tsv"))?)?;
    print!("{SUMMARY_HEADER}{}", summary_line(&result));
    Ok(())
}

fn grid(cli: &Cli, spec_path: &Path) -> Result<()> {
    let text = fs::read_to_string(spec_path).map_err(|_| Error::MissingResource(spec_path.to_path_buf()))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| Error::Config(format!("{}: {e}", spec_path.display())))?;
    let mut over = overlay(cli, Vec::new(), ("seeds", "output_dir"))?;
    if let Some(seed @ toml::Value::Integer(_)) = over.get("seeds").cloned() {
        over.insert("seeds".into(), toml::Value::Array(vec![seed]));
    }
    super::merge(&mut table, over);
    let mut spec: DsmGridSpec = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string().trim().replace('\n', " ")))?;
    spec.resolve_paths(spec_path.parent().unwrap_or(Path::new(".")));
    if let Some(out) = &cli.out {
        spec.output_dir = out.clone();
    }
    spec.validate()?;
    spec.check_resources()?;
    fs::create_dir_all(&spec.output_dir)?;
    fs::write(spec.output_dir.join("resolved_config.toml"), spec.to_toml()?)?;
    let outcome = run_grid(&spec)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "representation\ttask\tmean\tstd\tfailed_cells")?;
    for r in &outcome.report.rows {
        writeln!(stdout, "{}\t{}\t{:.6}\t{:.6}\t{}", r.representation, r.task, r.mean, r.std, r.failed_cells)?;
    }
    Ok(())
}

fn inspect(path: &Path) -> Result<()> {
    let model = read_model_file(path, None)?;
    println!("kind\t{}", model.kind());
    println!("dim\t{}", model.dim());
    println!("parameters\t{}", model.param_count());
    let flat = model.flat_params();
    let norm = flat.iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("parameter_norm\t{norm:.6}");
    Ok(())
}
