//! Paraphrase acquisition for noun compounds: backtranslation through pivot
//! languages with self- and non-English filtering, and pre-extracted
//! co-occurrence paraphrases.

mod backend;
mod langid;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::NounCompound;
use crate::error::{Error, Result};
use crate::train::ParaphrasePair;

pub use backend::{HttpBackend, HttpBackendConfig, MockBackend, TranslationBackend};
pub use langid::{LanguageIdentifier, VocabularyRatio};

/// Pivot languages used when none are given.
pub const DEFAULT_PIVOTS: [&str; 4] = ["fr", "it", "es", "ro"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParaphraseSource {
    Backtranslation,
    Cooccurrence,
}

impl fmt::Display for ParaphraseSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParaphraseSource::Backtranslation => "backtranslation",
            ParaphraseSource::Cooccurrence => "cooccurrence",
        })
    }
}

impl FromStr for ParaphraseSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "backtranslation" => Ok(ParaphraseSource::Backtranslation),
            "cooccurrence" => Ok(ParaphraseSource::Cooccurrence),
            other => Err(Error::InvalidArgument(format!("unknown paraphrase source `{other}`"))),
        }
    }
}

/// Filtered paraphrases of one compound. `raw_count` is the number of
/// candidates before filtering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParaphraseSet {
    pub compound: NounCompound,
    pub paraphrases: Vec<Vec<String>>,
    pub source: ParaphraseSource,
    pub raw_count: usize,
}

impl ParaphraseSet {
    pub fn len(&self) -> usize {
        self.paraphrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paraphrases.is_empty()
    }

    /// Whether `tokens` (compared lowercased) is one of the paraphrases.
    pub fn contains(&self, tokens: &[&str]) -> bool {
        self.paraphrases.iter().any(|p| {
            p.len() == tokens.len() && p.iter().zip(tokens).all(|(a, b)| a.eq_ignore_ascii_case(b))
        })
    }

    pub fn pairs(&self) -> impl Iterator<Item = ParaphrasePair> + '_ {
        self.paraphrases.iter().map(|p| ParaphrasePair {
            compound: self.compound.clone(),
            paraphrase: p.clone(),
        })
    }
}

/// One raw backtranslation candidate and the pivot it came through.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Candidate {
    pub pivot: String,
    pub text: String,
}

/// Translates `w1 w2` into each pivot and every forward translation back to
/// English, keeping all suggestions in pivot order then backend order. A
/// failing pivot is logged and skipped; all pivots failing is an error.
pub fn backtranslate(nc: &NounCompound, backend: &dyn TranslationBackend, pivots: &[&str]) -> Result<Vec<Candidate>> {
    if pivots.is_empty() {
        return Err(Error::InvalidArgument("no pivot languages given".into()));
    }
    let source = nc.to_string();
    let mut out = Vec::new();
    let mut failures = Vec::new();
    for &pivot in pivots {
        let attempt = || -> Result<Vec<Candidate>> {
            let mut found = Vec::new();
            for forward in backend.translate(&source, "en", pivot)? {
                for back in backend.translate(&forward, pivot, "en")? {
                    found.push(Candidate {
                        pivot: pivot.to_string(),
                        text: back,
                    });
                }
            }
            Ok(found)
        };
        match attempt() {
            Ok(found) => out.extend(found),
            Err(e) => {
                log::warn!("backtranslation of `{source}` via {pivot} failed: {e}");
                failures.push(format!("{pivot}: {e}"));
            }
        }
    }
    if failures.len() == pivots.len() {
        return Err(Error::Backend(format!(
            "every pivot failed for `{source}`: {}",
            failures.join("; ")
        )));
    }
    Ok(out)
}

/// Backtranslates many compounds with at most `in_flight` concurrent
/// requests. Results keep the input order.
pub fn backtranslate_all(
    compounds: &[NounCompound],
    backend: &dyn TranslationBackend,
    pivots: &[&str],
    in_flight: usize,
) -> Result<Vec<(NounCompound, Result<Vec<Candidate>>)>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(in_flight.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(pool.install(|| {
        compounds
            .par_iter()
            .map(|nc| (nc.clone(), backtranslate(nc, backend, pivots)))
            .collect()
    }))
}

fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// Self-removal, non-English removal, tokenization and deduplication, in that
/// order.
pub fn filter_paraphrases<S: AsRef<str>>(
    nc: &NounCompound,
    raw: &[S],
    langid: &dyn LanguageIdentifier,
) -> ParaphraseSet {
    let own = [nc.w1().to_lowercase(), nc.w2().to_lowercase()];
    let mut seen = BTreeSet::new();
    let mut paraphrases = Vec::new();
    for cand in raw {
        let cand = cand.as_ref();
        let tokens = tokenize(cand);
        if tokens.is_empty() || tokens == own {
            continue;
        }
        if !langid.is_english(cand) {
            continue;
        }
        if seen.insert(tokens.clone()) {
            paraphrases.push(tokens);
        }
    }
    ParaphraseSet {
        compound: nc.clone(),
        paraphrases,
        source: ParaphraseSource::Backtranslation,
        raw_count: raw.len(),
    }
}

/// Co-occurrence paraphrases grouped per compound, plus rejection counts.
#[derive(Debug, Clone, Default)]
pub struct CooccurrenceLoad {
    pub sets: BTreeMap<NounCompound, ParaphraseSet>,
    /// Lines whose paraphrase length fell outside 3..=5 tokens.
    pub rejected_length: usize,
    /// Lines whose constituents failed the vocabulary filter.
    pub rejected_vocabulary: usize,
}

/// Reads `w1\tw2\tparaphrase` lines, keeping 3-5 token paraphrases of
/// compounds whose constituents pass `in_vocabulary`.
pub fn load_cooccurrence<R: Read>(source: R, in_vocabulary: &dyn Fn(&str) -> bool) -> Result<CooccurrenceLoad> {
    let mut load = CooccurrenceLoad::default();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(Error::Parse {
                line: i + 1,
                reason: "expected `w1\\tw2\\tparaphrase`".into(),
            });
        }
        let nc = NounCompound::new(f[0].trim(), f[1].trim()).map_err(|e| Error::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        let tokens = tokenize(f[2]);
        if !(3..=5).contains(&tokens.len()) {
            load.rejected_length += 1;
            continue;
        }
        if !(in_vocabulary(nc.w1()) && in_vocabulary(nc.w2())) {
            load.rejected_vocabulary += 1;
            continue;
        }
        let set = load.sets.entry(nc.clone()).or_insert_with(|| ParaphraseSet {
            compound: nc,
            paraphrases: Vec::new(),
            source: ParaphraseSource::Cooccurrence,
            raw_count: 0,
        });
        set.raw_count += 1;
        if !set.paraphrases.contains(&tokens) {
            set.paraphrases.push(tokens);
        }
    }
    if load.rejected_length > 0 {
        log::info!("rejected {} co-occurrence paraphrases outside 3-5 tokens", load.rejected_length);
    }
    Ok(load)
}

/// Backtranslation cache: `w1\tw2\tpivot\tcandidate` lines.
pub fn write_cache<W: Write>(entries: &[(NounCompound, Vec<Candidate>)], sink: W) -> Result<()> {
    let mut out = BufWriter::new(sink);
    for (nc, cands) in entries {
        for c in cands {
            writeln!(out, "{}\t{}\t{}\t{}", nc.w1(), nc.w2(), c.pivot, c.text)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a backtranslation cache, grouping candidates by compound in file order.
pub fn read_cache<R: Read>(source: R) -> Result<BTreeMap<NounCompound, Vec<Candidate>>> {
    let mut map: BTreeMap<NounCompound, Vec<Candidate>> = BTreeMap::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.splitn(4, '\t').collect();
        if f.len() != 4 {
            return Err(Error::Parse {
                line: i + 1,
                reason: "expected `w1\\tw2\\tpivot\\tcandidate`".into(),
            });
        }
        let nc = NounCompound::new(f[0], f[1]).map_err(|e| Error::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        map.entry(nc).or_default().push(Candidate {
            pivot: f[2].to_string(),
            text: f[3].to_string(),
        });
    }
    Ok(map)
}

/// Writes sets as `w1\tw2\tsource\tparaphrase` lines.
pub fn write_sets<'a, W: Write>(sets: impl IntoIterator<Item = &'a ParaphraseSet>, sink: W) -> Result<()> {
    let mut out = BufWriter::new(sink);
    for set in sets {
        for p in &set.paraphrases {
            writeln!(out, "{}\t{}\t{}\t{}", set.compound.w1(), set.compound.w2(), set.source, p.join(" "))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads `w1\tw2\tsource\tparaphrase` lines back into sets keyed by
/// compound. `raw_count` is the number of lines read for the compound.
pub fn read_sets<R: Read>(source: R) -> Result<BTreeMap<NounCompound, ParaphraseSet>> {
    let mut sets: BTreeMap<NounCompound, ParaphraseSet> = BTreeMap::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| Error::Parse { line: i + 1, reason };
        let f: Vec<&str> = line.splitn(4, '\t').collect();
        if f.len() != 4 {
            return Err(err("expected `w1\\tw2\\tsource\\tparaphrase`".into()));
        }
        let nc = NounCompound::new(f[0], f[1]).map_err(|e| err(e.to_string()))?;
        let source: ParaphraseSource = f[2].parse().map_err(|e: Error| err(e.to_string()))?;
        let tokens = tokenize(f[3]);
        if tokens.is_empty() {
            return Err(err("empty paraphrase".into()));
        }
        let set = sets.entry(nc.clone()).or_insert_with(|| ParaphraseSet {
            compound: nc,
            paraphrases: Vec::new(),
            source,
            raw_count: 0,
        });
        if set.source != source {
            return Err(err(format!("mixed paraphrase sources for `{}`", set.compound.surface())));
        }
        set.raw_count += 1;
        if !set.paraphrases.contains(&tokens) {
            set.paraphrases.push(tokens);
        }
    }
    Ok(sets)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParaphraseStats {
    /// Mean surviving paraphrases per compound, counting empty sets.
    pub mean_per_compound: f64,
    pub total: usize,
    /// Share of raw candidates removed by filtering.
    pub filtered_fraction: f64,
}

pub fn paraphrase_stats<'a>(sets: impl IntoIterator<Item = &'a ParaphraseSet>) -> Result<ParaphraseStats> {
    let mut n = 0usize;
    let mut total = 0usize;
    let mut raw = 0usize;
    for s in sets {
        n += 1;
        total += s.len();
        raw += s.raw_count;
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no paraphrase sets".into()));
    }
    Ok(ParaphraseStats {
        mean_per_compound: total as f64 / n as f64,
        total,
        filtered_fraction: if raw == 0 { 0.0 } else { 1.0 - total as f64 / raw as f64 },
    })
}

#[cfg(test)]
mod tests {
    #[test]
    fn sets_round_trip() {
        let text = "baby\toil\tbacktranslation\toil for baby\nolive\toil\tbacktranslation\toil from olives\nolive\toil\tbacktranslation\toil of olive\n";
        let sets = super::read_sets(text.as_bytes()).unwrap();
        assert_eq!(sets.len(), 2);
        let mut out = Vec::new();
        super::write_sets(sets.values(), &mut out).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.sort();
        let written = String::from_utf8(out).unwrap();
        let mut got: Vec<&str> = written.lines().collect();
        got.sort();
        assert_eq!(got, lines);
        assert!(super::read_sets("a\tb\tbogus\tx y\n".as_bytes()).is_err());
    }

    use super::*;

    fn baby_oil_backend() -> MockBackend {
        let mut m = MockBackend::new();
        m.insert("en", "fr", "baby oil", &["huile pour bébé"])
            .insert("fr", "en", "huile pour bébé", &["oil for baby", "baby oil"]);
        m
    }

    fn nc(a: &str, b: &str) -> NounCompound {
        NounCompound::new(a, b).unwrap()
    }

    #[test]
    fn backtranslate_baby_oil() {
        let raw = backtranslate(&nc("baby", "oil"), &baby_oil_backend(), &["fr"]).unwrap();
        let texts: Vec<&str> = raw.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, vec!["oil for baby", "baby oil"]);
    }

    #[test]
    fn empty_backend_gives_no_candidates() {
        let raw = backtranslate(&nc("baby", "oil"), &MockBackend::new(), &DEFAULT_PIVOTS).unwrap();
        assert!(raw.is_empty());
    }

    #[test]
    fn pivot_order_and_failures() {
        let mut m = MockBackend::new();
        m.insert("en", "fr", "a b", &["x"])
            .insert("fr", "en", "x", &["b of a"])
            .insert("en", "it", "a b", &["y"])
            .insert("it", "en", "y", &["b for a"]);
        let raw = backtranslate(&nc("a", "b"), &m, &["it", "fr"]).unwrap();
        assert_eq!(
            raw,
            vec![
                Candidate { pivot: "it".into(), text: "b for a".into() },
                Candidate { pivot: "fr".into(), text: "b of a".into() },
            ]
        );
        m.fail_language("it");
        assert_eq!(backtranslate(&nc("a", "b"), &m, &["it", "fr"]).unwrap().len(), 1);
        assert!(matches!(backtranslate(&nc("a", "b"), &m, &["it"]), Err(Error::Backend(_))));
        assert!(backtranslate(&nc("a", "b"), &m, &[]).is_err());
    }

    #[test]
    fn concurrent_backtranslation_keeps_order() {
        let mut m = MockBackend::new();
        let compounds: Vec<NounCompound> = (0..20).map(|i| nc(&format!("a{i}"), "b")).collect();
        for c in &compounds {
            let src = c.to_string();
            m.insert("en", "fr", &src, &[&format!("fr {src}")]);
            m.insert("fr", "en", &format!("fr {src}"), &[&format!("b of {}", c.w1())]);
        }
        let out = backtranslate_all(&compounds, &m, &["fr"], 4).unwrap();
        for ((c, res), orig) in out.iter().zip(&compounds) {
            assert_eq!(c, orig);
            assert_eq!(res.as_ref().unwrap()[0].text, format!("b of {}", c.w1()));
        }
    }

    #[test]
    fn filter_examples() {
        let id = VocabularyRatio::new(["oil", "for", "baby"]);
        let set = filter_paraphrases(&nc("baby", "oil"), &["oil for baby", "baby oil"], &id);
        assert_eq!(set.paraphrases, vec![vec!["oil", "for", "baby"]]);
        assert_eq!(set.raw_count, 2);
        let set = filter_paraphrases(&nc("baby", "oil"), &["huile bébé"], &id);
        assert!(set.is_empty());
        let set = filter_paraphrases(&nc("baby", "oil"), &["oil for baby", "Oil  for baby", "BABY OIL"], &id);
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn cooccurrence_loading() {
        let text = "apple\tcake\tcake made of apples\n\
                    apple\tcake\tcake made of apples\n\
                    apple\tcake\tcake that is made of fresh apples\n\
                    apple\tcake\tcake apples\n\
                    zzz\tcake\tcake made of zzz\n";
        let vocab = |t: &str| t != "zzz";
        let load = load_cooccurrence(text.as_bytes(), &vocab).unwrap();
        let set = &load.sets[&nc("apple", "cake")];
        assert_eq!(set.paraphrases, vec![vec!["cake", "made", "of", "apples"]]);
        assert_eq!(set.source, ParaphraseSource::Cooccurrence);
        assert_eq!(load.rejected_length, 2);
        assert_eq!(load.rejected_vocabulary, 1);
        assert!(matches!(
            load_cooccurrence("apple cake x\n".as_bytes(), &|_| true),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn cache_roundtrip() {
        let entries = vec![(
            nc("baby", "oil"),
            vec![
                Candidate { pivot: "fr".into(), text: "oil for baby".into() },
                Candidate { pivot: "it".into(), text: "baby oil".into() },
            ],
        )];
        let mut buf = Vec::new();
        write_cache(&entries, &mut buf).unwrap();
        let back = read_cache(&buf[..]).unwrap();
        assert_eq!(back[&nc("baby", "oil")], entries[0].1);
    }

    #[test]
    fn stats() {
        let mk = |n: usize, raw: usize| ParaphraseSet {
            compound: nc("a", "b"),
            paraphrases: (0..n).map(|i| vec![format!("t{i}")]).collect(),
            source: ParaphraseSource::Backtranslation,
            raw_count: raw,
        };
        let s = paraphrase_stats(&[mk(2, 4), mk(4, 4)]).unwrap();
        assert_eq!(s.mean_per_compound, 3.0);
        assert_eq!(s.total, 6);
        assert_eq!(s.filtered_fraction, 0.25);
        let s = paraphrase_stats(&[mk(0, 3), mk(2, 3)]).unwrap();
        assert_eq!(s.mean_per_compound, 1.0);
        assert!(paraphrase_stats(&[]).is_err());
    }
}
