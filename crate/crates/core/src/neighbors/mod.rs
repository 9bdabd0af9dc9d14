//! Nearest-neighbor analysis: exact cosine top-k over words and compound
//! vectors, the six neighbor categories, category reports per cohort, the
//! rare-neighbor frequency curve, and Wu-Palmer taxonomy similarity.

mod taxonomy;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufWriter, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::{EmbeddingSpace, NounCompound};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::paraphrase::ParaphraseSet;

pub use taxonomy::{wu_palmer, Taxonomy};

/// Neighbor categories in precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    RareWord,
    BacktransParaphrase,
    SharedConstituent,
    WordNetSimilar,
    OtherCompound,
    OtherWord,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::RareWord,
        Category::BacktransParaphrase,
        Category::SharedConstituent,
        Category::WordNetSimilar,
        Category::OtherCompound,
        Category::OtherWord,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::RareWord => "rare_word",
            Category::BacktransParaphrase => "backtrans_paraphrase",
            Category::SharedConstituent => "shared_constituent",
            Category::WordNetSimilar => "wordnet_similar",
            Category::OtherCompound => "other_compound",
            Category::OtherWord => "other_word",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborEntry {
    pub token: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
    pub category: Option<Category>,
}

/// Unit-normalized candidate vectors for exact search.
#[derive(Debug, Clone, Default)]
pub struct CandidatePool {
    tokens: Vec<String>,
    unit: Vec<Vec<f64>>,
}

impl CandidatePool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Zero vectors have no direction and are skipped.
    pub fn push(&mut self, token: impl Into<String>, vector: &[f64]) {
        let n = norm(vector);
        if n > 0.0 {
            self.tokens.push(token.into());
            self.unit.push(vector.iter().map(|x| x / n).collect());
        }
    }

    pub fn from_space(space: &EmbeddingSpace) -> Self {
        let mut pool = Self::new();
        for (t, v) in space.iter() {
            pool.push(t, v);
        }
        pool
    }

    /// Single-word tokens of `space` only (no underscore).
    pub fn words_of(space: &EmbeddingSpace) -> Self {
        let mut pool = Self::new();
        for (t, v) in space.iter().filter(|(t, _)| !t.contains('_')) {
            pool.push(t, v);
        }
        pool
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Exact top-k by cosine similarity over the pool minus `exclude`; ties go to
/// the lexicographically smaller token. Returns everything when `k` exceeds
/// the candidate count.
pub fn top_k(pool: &CandidatePool, query: &[f64], k: usize, exclude: &HashSet<&str>) -> Result<Vec<NeighborEntry>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let qn = norm(query);
    if qn == 0.0 {
        return Err(Error::Degenerate("zero-norm query".into()));
    }
    let mut scored: Vec<(f64, &str)> = pool
        .tokens
        .iter()
        .zip(&pool.unit)
        .filter(|(t, _)| !exclude.contains(t.as_str()))
        .map(|(t, u)| ((dot(query, u) / qn).clamp(-1.0, 1.0), t.as_str()))
        .collect();
    let order = |a: &(f64, &str), b: &(f64, &str)| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1));
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, order);
        scored.truncate(k);
    }
    scored.sort_by(order);
    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(i, (score, token))| NeighborEntry {
            token: token.to_string(),
            score,
            rank: i + 1,
            category: None,
        })
        .collect())
}

/// Everything categorization consults.
#[derive(Debug, Clone, Copy)]
pub struct CategoryResources<'a> {
    /// Corpus counts; absent tokens count as 0.
    pub frequencies: &'a HashMap<String, u64>,
    /// Backtranslation paraphrases keyed by compound surface.
    pub backtranslation: Option<&'a HashMap<String, ParaphraseSet>>,
    /// Without a taxonomy the WordNet category is never assigned.
    pub taxonomy: Option<&'a Taxonomy>,
    /// Tokens seen fewer times than this are rare.
    pub rare_threshold: u64,
    /// Wu-Palmer scores above this are similar.
    pub similarity_threshold: f64,
}

impl<'a> CategoryResources<'a> {
    pub fn new(frequencies: &'a HashMap<String, u64>) -> Self {
        CategoryResources {
            frequencies,
            backtranslation: None,
            taxonomy: None,
            rare_threshold: 10,
            similarity_threshold: 0.25,
        }
    }

    pub fn is_rare(&self, token: &str) -> bool {
        self.frequencies.get(token).copied().unwrap_or(0) < self.rare_threshold
    }
}

/// Assigns the first matching category in precedence order.
pub fn categorize(target: &NounCompound, neighbor: &str, res: &CategoryResources<'_>) -> Category {
    if res.is_rare(neighbor) {
        return Category::RareWord;
    }
    let parts: Vec<&str> = neighbor.split('_').collect();
    if let Some(set) = res.backtranslation.and_then(|m| m.get(target.surface())) {
        if set.contains(&parts) {
            return Category::BacktransParaphrase;
        }
    }
    let own = target.constituents();
    if parts.iter().any(|p| own.contains(p)) {
        return Category::SharedConstituent;
    }
    if let Some(tax) = res.taxonomy {
        if tax
            .wu_palmer(target.surface(), neighbor)
            .is_some_and(|s| s > res.similarity_threshold)
        {
            return Category::WordNetSimilar;
        }
    }
    if parts.len() > 1 {
        Category::OtherCompound
    } else {
        Category::OtherWord
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cohort {
    Rare,
    Frequent,
    All,
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cohort::Rare => "rare",
            Cohort::Frequent => "frequent",
            Cohort::All => "all",
        })
    }
}

/// The `n` least and `n` most frequent compounds (ties broken by surface).
pub fn select_cohorts(compounds: &[NounCompound], n: usize) -> (Vec<NounCompound>, Vec<NounCompound>) {
    let mut sorted = compounds.to_vec();
    sorted.sort_by(|a, b| a.frequency.cmp(&b.frequency).then_with(|| a.surface().cmp(b.surface())));
    let rare = sorted.iter().take(n).cloned().collect();
    sorted.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.surface().cmp(b.surface())));
    let frequent = sorted.into_iter().take(n).collect();
    (rare, frequent)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborReport {
    pub cohort: Cohort,
    pub entries: Vec<(NounCompound, Vec<NeighborEntry>)>,
    /// Percentage of all categorized neighbors per category; sums to 100.
    pub distribution: BTreeMap<Category, f64>,
}

/// Top-k neighbors of every target (the target itself always excluded),
/// categorized and aggregated into percentages.
pub fn neighbor_report(
    targets: &[(NounCompound, Vec<f64>)],
    pool: &CandidatePool,
    k: usize,
    resources: &CategoryResources<'_>,
    cohort: Cohort,
) -> Result<NeighborReport> {
    if targets.is_empty() {
        return Err(Error::InvalidArgument("empty cohort".into()));
    }
    let entries: Vec<(NounCompound, Vec<NeighborEntry>)> = targets
        .par_iter()
        .map(|(nc, v)| {
            let exclude = HashSet::from([nc.surface()]);
            let mut list = top_k(pool, v, k, &exclude)?;
            for e in &mut list {
                e.category = Some(categorize(nc, &e.token, resources));
            }
            Ok((nc.clone(), list))
        })
        .collect::<Result<_>>()?;
    let mut counts: BTreeMap<Category, usize> = Category::ALL.iter().map(|&c| (c, 0)).collect();
    let mut total = 0usize;
    for (_, list) in &entries {
        for e in list {
            *counts.get_mut(&e.category.expect("categorized")).unwrap() += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::InvalidArgument("no neighbors found for any target".into()));
    }
    let distribution = counts
        .into_iter()
        .map(|(c, n)| (c, 100.0 * n as f64 / total as f64))
        .collect();
    Ok(NeighborReport {
        cohort,
        entries,
        distribution,
    })
}

/// TSV rows `target\trank\tneighbor\tscore\tcategory`, then a `#`-prefixed
/// summary block of category percentages.
pub fn write_report<W: Write>(report: &NeighborReport, sink: W) -> Result<()> {
    let mut out = BufWriter::new(sink);
    writeln!(out, "target\trank\tneighbor\tscore\tcategory")?;
    for (nc, list) in &report.entries {
        for e in list {
            let cat = e.category.map_or("-", Category::name);
            writeln!(out, "{}\t{}\t{}\t{:.6}\t{}", nc.surface(), e.rank, e.token, e.score, cat)?;
        }
    }
    writeln!(out, "# cohort\t{}", report.cohort)?;
    for (c, p) in &report.distribution {
        writeln!(out, "# {}\t{:.4}", c, p)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub center: f64,
    /// Mean percentage of rare neighbors among compounds in the bin.
    pub percent: f64,
    pub compounds: usize,
}

/// For frequency bins `[edges[i], edges[i+1])`, the mean percentage of top-k
/// distributional neighbors with frequency below `threshold`. Compounds
/// without a vector are skipped; empty bins are omitted.
pub fn rare_curve(
    space: &EmbeddingSpace,
    compounds: &[NounCompound],
    edges: &[u64],
    threshold: u64,
    k: usize,
) -> Result<Vec<CurvePoint>> {
    if edges.len() < 2 || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("bin edges must be strictly increasing, at least two".into()));
    }
    let pool = CandidatePool::from_space(space);
    let fractions: Vec<(u64, f64)> = compounds
        .par_iter()
        .filter_map(|nc| space.lookup(nc.surface()).map(|v| (nc, v)))
        .map(|(nc, v)| {
            let exclude = HashSet::from([nc.surface()]);
            let list = top_k(&pool, v, k, &exclude)?;
            if list.is_empty() {
                return Ok((nc.frequency, 0.0));
            }
            let rare = list.iter().filter(|e| space.frequency(&e.token) < threshold).count();
            Ok((nc.frequency, rare as f64 / list.len() as f64))
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::new();
    for w in edges.windows(2) {
        let in_bin: Vec<f64> = fractions
            .iter()
            .filter(|(f, _)| *f >= w[0] && *f < w[1])
            .map(|(_, x)| *x)
            .collect();
        if in_bin.is_empty() {
            log::info!("frequency bin [{}, {}) has no compounds; omitted", w[0], w[1]);
            continue;
        }
        points.push(CurvePoint {
            center: (w[0] + w[1]) as f64 / 2.0,
            percent: 100.0 * in_bin.iter().sum::<f64>() / in_bin.len() as f64,
            compounds: in_bin.len(),
        });
    }
    Ok(points)
}
