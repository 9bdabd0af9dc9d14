use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{build_representation, RepresentationKind, RepresentationSpec};
use crate::compose::write_model_file;
use crate::embeddings::{open_embeddings, read_compounds, read_frequencies, EmbeddingSpace, NounCompound};
use crate::error::{Error, Result};
use crate::eval::{
    property_eval, read_labeled_compounds, read_properties, relation_eval, EvalConfig, LabeledCompound,
    LabeledInstance, RelationConfig, VectorProvider,
};
use crate::neighbors::{neighbor_report, select_cohorts, CandidatePool, CategoryResources, Cohort, Taxonomy};
use crate::paraphrase::{load_cooccurrence, read_sets, ParaphraseSet};
use crate::train::ParaphrasePair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Neighbors,
    Property,
    Relation,
}

/// One embedding space and its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub path: PathBuf,
    /// Frequency file; defaults to the `.freq` sidecar when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<PathBuf>,
    pub algorithm: String,
    pub window: u32,
    pub dimension: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeighborsConfig {
    pub k: usize,
    pub cohort_size: usize,
    pub rare_threshold: u64,
    pub similarity_threshold: f64,
}

impl Default for NeighborsConfig {
    fn default() -> Self {
        NeighborsConfig {
            k: 10,
            cohort_size: 100,
            rare_threshold: 10,
            similarity_threshold: 0.25,
        }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// A grid of embedding spaces × representations × seeds. Relative paths are
/// resolved against the directory of the spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DsmGridSpec {
    pub output_dir: PathBuf,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub tasks: Vec<Task>,
    /// Concurrent cells; 0 uses one worker per core.
    #[serde(default)]
    pub workers: usize,
    /// `w1\tw2` compounds used for composition training and neighbor targets.
    pub compounds: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relations: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub properties: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taxonomy: Option<PathBuf>,
    /// Backtranslation set file consulted when categorizing neighbors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backtranslation_sets: Option<PathBuf>,
    #[serde(default)]
    pub save_models: bool,
    #[serde(default)]
    pub relation: RelationConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub neighbors: NeighborsConfig,
    pub embeddings: Vec<EmbeddingSpec>,
    pub representations: Vec<RepresentationSpec>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl DsmGridSpec {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut spec: DsmGridSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.resolve_paths(base_dir);
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|_| Error::MissingResource(path.to_path_buf()))?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.output_dir);
        resolve(base, &mut self.compounds);
        for p in [&mut self.relations, &mut self.properties, &mut self.taxonomy, &mut self.backtranslation_sets]
            .into_iter()
            .flatten()
        {
            resolve(base, p);
        }
        for e in &mut self.embeddings {
            resolve(base, &mut e.path);
            if let Some(f) = &mut e.frequencies {
                resolve(base, f);
            }
        }
        for r in &mut self.representations {
            if let Some(p) = &mut r.paraphrases {
                resolve(base, p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.embeddings.is_empty() {
            return fail("grid lists no embedding spaces");
        }
        if self.representations.is_empty() {
            return fail("grid lists no representations");
        }
        if self.seeds.is_empty() {
            return fail("grid lists no seeds");
        }
        if self.tasks.is_empty() {
            return fail("grid lists no tasks");
        }
        for e in &self.embeddings {
            if e.algorithm.trim().is_empty() || e.dimension == 0 {
                return fail("embedding metadata must have a non-empty algorithm and positive dimension");
            }
        }
        let mut labels = HashSet::new();
        for r in &self.representations {
            r.validate()?;
            if !labels.insert(r.label()) {
                return Err(Error::Config(format!("duplicate representation `{}`", r.label())));
            }
        }
        if self.tasks.contains(&Task::Relation) && self.relations.is_none() {
            return fail("the relation task needs a `relations` file");
        }
        if self.tasks.contains(&Task::Property) && self.properties.is_none() {
            return fail("the property task needs a `properties` file");
        }
        if self.neighbors.k == 0 || self.neighbors.cohort_size == 0 {
            return fail("neighbors.k and neighbors.cohort_size must be positive");
        }
        Ok(())
    }

    /// Fails with the first referenced file that does not exist.
    pub fn check_resources(&self) -> Result<()> {
        let mut files: Vec<&Path> = vec![&self.compounds];
        files.extend(
            [&self.relations, &self.properties, &self.taxonomy, &self.backtranslation_sets]
                .into_iter()
                .flatten()
                .map(PathBuf::as_path),
        );
        for e in &self.embeddings {
            files.push(&e.path);
            files.extend(e.frequencies.as_deref());
        }
        files.extend(self.representations.iter().filter_map(|r| r.paraphrases.as_deref()));
        match files.into_iter().find(|p| !p.is_file()) {
            Some(p) => Err(Error::MissingResource(p.to_path_buf())),
            None => Ok(()),
        }
    }

    fn cell_id(&self, rep: &RepresentationSpec, emb: &EmbeddingSpec, seed: u64) -> String {
        let identity = serde_json::json!({
            "representation": rep,
            "embedding": emb,
            "seed": seed,
            "tasks": self.tasks,
            "compounds": self.compounds,
            "relations": self.relations,
            "properties": self.properties,
            "taxonomy": self.taxonomy,
            "backtranslation_sets": self.backtranslation_sets,
            "relation": self.relation,
            "eval": self.eval,
            "neighbors": self.neighbors,
        });
        let digest = Sha256::digest(identity.to_string().as_bytes());
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
}

/// One result line of a cell. `value` is F1 for evaluation tasks and a
/// percentage for neighbor categories (which carry no precision/recall).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub task: String,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub cell_id: String,
    pub representation: String,
    pub dsm: usize,
    pub algorithm: String,
    pub window: u32,
    pub dimension: usize,
    pub seed: u64,
    pub status: CellStatus,
    pub error: Option<String>,
    pub rows: Vec<CellRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub representation: String,
    pub task: String,
    pub mean: f64,
    /// Population standard deviation across embedding spaces.
    pub std: f64,
    pub dsms: usize,
    pub failed_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestRow {
    pub task: String,
    pub representation: String,
    pub algorithm: String,
    pub window: u32,
    pub dimension: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    pub rows: Vec<AggregateRow>,
    pub best: Vec<BestRow>,
}

impl AggregateReport {
    pub fn row(&self, representation: &str, task: &str) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.representation == representation && r.task == task)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub cells: Vec<CellRecord>,
    pub report: AggregateReport,
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    items.filter(|s| seen.insert(*s)).map(str::to_string).collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Seeds are averaged within each embedding space first; the mean and
/// population standard deviation are then taken across spaces. Failed cells
/// are excluded; a representation whose cells all failed is an error.
pub fn aggregate(cells: &[CellRecord]) -> Result<AggregateReport> {
    let reps = first_seen(cells.iter().map(|c| c.representation.as_str()));
    let tasks = first_seen(cells.iter().flat_map(|c| c.rows.iter().map(|r| r.task.as_str())));
    let mut rows = Vec::new();
    // (task) -> candidates in (rep, dsm) order
    let mut best_candidates: BTreeMap<&str, Vec<BestRow>> = BTreeMap::new();
    for rep in &reps {
        let mine: Vec<&CellRecord> = cells.iter().filter(|c| &c.representation == rep).collect();
        let failed = mine.iter().filter(|c| c.status == CellStatus::Failed).count();
        if failed == mine.len() {
            let why = mine.iter().find_map(|c| c.error.clone()).unwrap_or_default();
            return Err(Error::Evaluation(format!("every cell of `{rep}` failed: {why}")));
        }
        if failed > 0 {
            log::warn!("{failed} failed cells of `{rep}` excluded from aggregates");
        }
        let mut by_dsm: BTreeMap<usize, Vec<&CellRecord>> = BTreeMap::new();
        for c in mine.iter().filter(|c| c.status == CellStatus::Ok) {
            by_dsm.entry(c.dsm).or_default().push(c);
        }
        for task in &tasks {
            let mut per_dsm = Vec::new();
            for group in by_dsm.values() {
                let hits: Vec<&CellRow> = group
                    .iter()
                    .filter_map(|c| c.rows.iter().find(|r| &r.task == task))
                    .collect();
                if hits.is_empty() {
                    continue;
                }
                let n = hits.len() as f64;
                let avg = |f: fn(&CellRow) -> Option<f64>| hits.iter().map(|r| f(r)).sum::<Option<f64>>().map(|s| s / n);
                let value = hits.iter().map(|r| r.value).sum::<f64>() / n;
                per_dsm.push(value);
                if let (Some(p), Some(r)) = (avg(|r| r.precision), avg(|r| r.recall)) {
                    let c = group[0];
                    best_candidates.entry(task).or_default().push(BestRow {
                        task: task.clone(),
                        representation: rep.clone(),
                        algorithm: c.algorithm.clone(),
                        window: c.window,
                        dimension: c.dimension,
                        precision: p,
                        recall: r,
                        f1: value,
                    });
                }
            }
            if per_dsm.is_empty() {
                continue;
            }
            let (mean, std) = mean_std(&per_dsm);
            rows.push(AggregateRow {
                representation: rep.clone(),
                task: task.clone(),
                mean,
                std,
                dsms: per_dsm.len(),
                failed_cells: failed,
            });
        }
    }
    let best = tasks
        .iter()
        .filter_map(|t| best_candidates.remove(t.as_str()))
        .map(|cands| {
            cands
                .into_iter()
                .reduce(|best, c| if c.f1 > best.f1 { c } else { best })
                .expect("non-empty candidate list")
        })
        .collect();
    Ok(AggregateReport { rows, best })
}

/// Reads a JSON-lines cell file (journal or final results).
pub fn read_cells(path: &Path) -> Result<Vec<CellRecord>> {
    let file = File::open(path).map_err(|_| Error::MissingResource(path.to_path_buf()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

fn write_cells_jsonl(cells: &[CellRecord], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for c in cells {
        let line = serde_json::to_string(c).map_err(|e| Error::Evaluation(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

fn write_cells_tsv(cells: &[CellRecord], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "cell_id\trepresentation\talgorithm\twindow\tdimension\tseed\tstatus\ttask\tprecision\trecall\tvalue")?;
    for c in cells {
        let prefix = format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            c.cell_id, c.representation, c.algorithm, c.window, c.dimension, c.seed
        );
        match c.status {
            CellStatus::Ok => {
                for r in &c.rows {
                    writeln!(out, "{prefix}\tok\t{}\t{}\t{}\t{}", r.task, opt(r.precision), opt(r.recall), r.value)?;
                }
            }
            CellStatus::Failed => writeln!(out, "{prefix}\tfailed\t-\t-\t-\t-")?,
        }
    }
    out.flush()?;
    Ok(())
}

fn write_aggregate_tsv(report: &AggregateReport, dir: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(dir.join("aggregate.tsv"))?);
    writeln!(out, "representation\ttask\tmean\tstd\tdsms\tfailed_cells")?;
    for r in &report.rows {
        writeln!(
            out,
            "{}\t{}\t{:.6}\t{:.6}\t{}\t{}",
            r.representation, r.task, r.mean, r.std, r.dsms, r.failed_cells
        )?;
    }
    out.flush()?;
    let mut out = BufWriter::new(File::create(dir.join("best.tsv"))?);
    writeln!(out, "task\trepresentation\talgorithm\twindow\tdimension\tprecision\trecall\tf1")?;
    for b in &report.best {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
            b.task, b.representation, b.algorithm, b.window, b.dimension, b.precision, b.recall, b.f1
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Read-only inputs shared by every cell of one embedding space.
struct Shared<'a> {
    spec: &'a DsmGridSpec,
    space: Arc<EmbeddingSpace>,
    compounds: Vec<NounCompound>,
    relations: Option<&'a [LabeledCompound]>,
    properties: Option<&'a BTreeMap<String, Vec<LabeledInstance>>>,
    taxonomy: Option<&'a Taxonomy>,
    backtranslation: Option<&'a HashMap<String, ParaphraseSet>>,
}

fn load_space(e: &EmbeddingSpec) -> Result<EmbeddingSpace> {
    let space = open_embeddings(&e.path, false)?;
    if space.dim() != e.dimension {
        return Err(Error::Config(format!(
            "{} has dimension {}, grid metadata says {}",
            e.path.display(),
            space.dim(),
            e.dimension
        )));
    }
    match &e.frequencies {
        Some(f) => Ok(space.with_frequencies(read_frequencies(File::open(f)?)?)),
        None => Ok(space),
    }
}

fn paraphrase_pairs(rep: &RepresentationSpec, space: &EmbeddingSpace) -> Result<Option<Vec<ParaphrasePair>>> {
    let Some(path) = &rep.paraphrases else {
        return Ok(None);
    };
    let file = File::open(path).map_err(|_| Error::MissingResource(path.clone()))?;
    let sets = match rep.kind {
        RepresentationKind::Cooccurrence => load_cooccurrence(file, &|w| space.contains(w))?.sets,
        _ => read_sets(file)?,
    };
    Ok(Some(sets.values().flat_map(ParaphraseSet::pairs).collect()))
}

fn neighbor_rows(sh: &Shared<'_>, provider: &dyn VectorProvider) -> Result<Vec<CellRow>> {
    let cfg = &sh.spec.neighbors;
    let targets: Vec<(NounCompound, Vec<f64>)> = sh
        .compounds
        .iter()
        .filter_map(|nc| provider.compound_vector(nc).map(|v| (nc.clone(), v)))
        .collect();
    if targets.is_empty() {
        return Err(Error::Evaluation("no compound can be embedded for the neighbors task".into()));
    }
    let mut pool = CandidatePool::words_of(&sh.space);
    for (nc, v) in &targets {
        pool.push(nc.surface(), v);
    }
    let vectors: HashMap<&str, &Vec<f64>> = targets.iter().map(|(nc, v)| (nc.surface(), v)).collect();
    let ncs: Vec<NounCompound> = targets.iter().map(|(nc, _)| nc.clone()).collect();
    let (rare, frequent) = select_cohorts(&ncs, cfg.cohort_size);
    let resources = CategoryResources {
        frequencies: sh.space.frequencies(),
        backtranslation: sh.backtranslation,
        taxonomy: sh.taxonomy,
        rare_threshold: cfg.rare_threshold,
        similarity_threshold: cfg.similarity_threshold,
    };
    let mut rows = Vec::new();
    for (cohort, members) in [(Cohort::Rare, rare), (Cohort::Frequent, frequent)] {
        let with_vectors: Vec<(NounCompound, Vec<f64>)> =
            members.into_iter().map(|nc| (nc.clone(), vectors[nc.surface()].clone())).collect();
        let report = neighbor_report(&with_vectors, &pool, cfg.k, &resources, cohort)?;
        rows.extend(report.distribution.iter().map(|(cat, pct)| CellRow {
            task: format!("neighbors:{cohort}:{cat}"),
            precision: None,
            recall: None,
            value: *pct,
        }));
    }
    Ok(rows)
}

fn run_cell(sh: &Shared<'_>, rep: &RepresentationSpec, seed: u64, model_path: Option<PathBuf>) -> Result<Vec<CellRow>> {
    let pairs = paraphrase_pairs(rep, &sh.space)?;
    let built = build_representation(rep, sh.space.clone(), &sh.compounds, pairs.as_deref(), seed)?;
    if let (Some(path), Some(trained)) = (model_path, &built.trained) {
        write_model_file(&trained.model, &path)?;
    }
    let provider = &built.representation;
    let eval = EvalConfig {
        seed,
        ..sh.spec.eval.clone()
    };
    let mut rows = Vec::new();
    for task in &sh.spec.tasks {
        match task {
            Task::Relation => {
                let data = sh.relations.expect("validated");
                let r = relation_eval(provider, data, &sh.spec.relation, &eval)?;
                rows.push(CellRow {
                    task: r.name,
                    precision: Some(r.metrics.precision),
                    recall: Some(r.metrics.recall),
                    value: r.metrics.f1,
                });
            }
            Task::Property => {
                let data = sh.properties.expect("validated");
                for r in property_eval(&sh.space, provider, data, &eval)? {
                    rows.push(CellRow {
                        task: format!("property:{}", r.name),
                        precision: Some(r.metrics.precision),
                        recall: Some(r.metrics.recall),
                        value: r.metrics.f1,
                    });
                }
            }
            Task::Neighbors => rows.extend(neighbor_rows(sh, provider)?),
        }
    }
    Ok(rows)
}

/// Runs every (embedding space × representation × seed) cell, persisting
/// each finished cell to `journal.jsonl` so an interrupted grid resumes
/// without recomputing. Writes `cells.jsonl`, `cells.tsv`, `aggregate.tsv`
/// and `best.tsv` in deterministic order.
pub fn run_grid(spec: &DsmGridSpec) -> Result<GridOutcome> {
    spec.validate()?;
    spec.check_resources()?;
    let out_dir = &spec.output_dir;
    fs::create_dir_all(out_dir)?;
    if spec.save_models {
        fs::create_dir_all(out_dir.join("models"))?;
    }
    let journal_path = out_dir.join("journal.jsonl");
    let done: HashMap<String, CellRecord> = if journal_path.is_file() {
        read_cells(&journal_path)?
            .into_iter()
            .filter(|c| c.status == CellStatus::Ok)
            .map(|c| (c.cell_id.clone(), c))
            .collect()
    } else {
        HashMap::new()
    };
    if !done.is_empty() {
        log::info!("resuming: {} finished cells found in the journal", done.len());
    }
    let journal = Mutex::new(OpenOptions::new().create(true).append(true).open(&journal_path)?);

    let relations = spec.relations.as_ref().map(|p| read_labeled_compounds(File::open(p)?)).transpose()?;
    let properties = spec.properties.as_ref().map(|p| read_properties(File::open(p)?)).transpose()?;
    let taxonomy = spec.taxonomy.as_ref().map(|p| Taxonomy::read(File::open(p)?)).transpose()?;
    let backtranslation: Option<HashMap<String, ParaphraseSet>> = spec
        .backtranslation_sets
        .as_ref()
        .map(|p| -> Result<_> {
            Ok(read_sets(File::open(p)?)?
                .into_values()
                .map(|s| (s.compound.surface().to_string(), s))
                .collect())
        })
        .transpose()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut cells = Vec::new();
    for (di, emb) in spec.embeddings.iter().enumerate() {
        let jobs: Vec<(&RepresentationSpec, u64, String)> = spec
            .representations
            .iter()
            .flat_map(|r| spec.seeds.iter().map(move |&s| (r, s)))
            .map(|(r, s)| (r, s, spec.cell_id(r, emb, s)))
            .collect();
        let pending = jobs.iter().filter(|(_, _, id)| !done.contains_key(id)).count();
        let shared = if pending > 0 {
            log::info!("embedding space {} ({}): {pending} cells to run", di, emb.path.display());
            let space = Arc::new(load_space(emb)?);
            let compounds = read_compounds(File::open(&spec.compounds)?, Some(&space))?;
            Some(Shared {
                spec,
                space,
                compounds,
                relations: relations.as_deref(),
                properties: properties.as_ref(),
                taxonomy: taxonomy.as_ref(),
                backtranslation: backtranslation.as_ref(),
            })
        } else {
            None
        };
        let records: Vec<CellRecord> = pool.install(|| {
            jobs.par_iter()
                .map(|(rep, seed, id)| -> Result<CellRecord> {
                    if let Some(prev) = done.get(id) {
                        return Ok(prev.clone());
                    }
                    let sh = shared.as_ref().expect("loaded when cells are pending");
                    let model_path = spec
                        .save_models
                        .then(|| out_dir.join("models").join(format!("{}-{id}.nccm", rep.label())));
                    let outcome = run_cell(sh, rep, *seed, model_path);
                    let (status, error, rows) = match outcome {
                        Ok(rows) => (CellStatus::Ok, None, rows),
                        Err(e) => {
                            log::warn!("cell {} / dsm {di} / seed {seed} failed: {e}", rep.label());
                            (CellStatus::Failed, Some(e.to_string()), Vec::new())
                        }
                    };
                    let record = CellRecord {
                        cell_id: id.clone(),
                        representation: rep.label(),
                        dsm: di,
                        algorithm: emb.algorithm.clone(),
                        window: emb.window,
                        dimension: emb.dimension,
                        seed: *seed,
                        status,
                        error,
                        rows,
                    };
                    let line = serde_json::to_string(&record).map_err(|e| Error::Evaluation(e.to_string()))?;
                    let mut j = journal.lock().expect("journal lock");
                    writeln!(j, "{line}")?;
                    j.flush()?;
                    Ok(record)
                })
                .collect::<Result<_>>()
        })?;
        cells.extend(records);
    }
    write_cells_jsonl(&cells, &out_dir.join("cells.jsonl"))?;
    write_cells_tsv(&cells, &out_dir.join("cells.tsv"))?;
    let report = aggregate(&cells)?;
    write_aggregate_tsv(&report, out_dir)?;
    Ok(GridOutcome { cells, report })
}
