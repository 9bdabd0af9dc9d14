//! Downstream evaluation: binary property prediction and multiclass
//! relation classification with linear classifiers, grid model selection,
//! random and lexical splits, and P/R/F1 scoring.

mod classifier;
mod metrics;
mod split;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::{EmbeddingSpace, NounCompound};
use crate::error::{Error, Result};
use crate::seeds::sub_seed;
use crate::train::{split_compounds, SplitRatios};

pub use classifier::{
    default_grid, fit_classifier, fit_logistic, logistic_gradient, logistic_objective, logistic_stability_bound,
    predict, train_classifier, Family, GridPoint, LinearClassifier, Selection, SolverConfig, DEFAULT_L2,
};
pub use metrics::{score, Averaging, ClassMetrics, Metrics, UNAVAILABLE};
pub use split::{lexical_split, LexicalSplit};

/// Property labels.
pub const POSITIVE: &str = "yes";
pub const NEGATIVE: &str = "no";

/// Maps compounds to vectors under some representation; `None` means the
/// representation cannot embed the compound.
pub trait VectorProvider: Send + Sync {
    fn dim(&self) -> usize;
    fn compound_vector(&self, nc: &NounCompound) -> Option<Vec<f64>>;
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Item {
    Word(String),
    Compound(NounCompound),
}

impl Item {
    /// `w1_w2` parses as a compound, anything else as a word.
    pub fn parse(s: &str) -> Result<Self> {
        if s.contains('_') {
            NounCompound::from_surface(s).map(Item::Compound)
        } else if s.is_empty() || s.chars().any(char::is_whitespace) {
            Err(Error::InvalidToken(s.to_string()))
        } else {
            Ok(Item::Word(s.to_string()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub item: Item,
    pub label: String,
}

impl LabeledInstance {
    pub fn new(item: Item, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.trim().is_empty() {
            return Err(Error::InvalidArgument("empty label".into()));
        }
        Ok(LabeledInstance { item, label })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledCompound {
    pub compound: NounCompound,
    pub fine: String,
    pub coarse: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Coarse,
    Fine,
}

impl LabeledCompound {
    pub fn label(&self, g: Granularity) -> &str {
        match g {
            Granularity::Coarse => &self.coarse,
            Granularity::Fine => &self.fine,
        }
    }
}

/// Reads `w1\tw2\tfine\tcoarse` lines.
pub fn read_labeled_compounds<R: Read>(source: R) -> Result<Vec<LabeledCompound>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let [w1, w2, fine, coarse] = fields[..] else {
            return Err(Error::Parse {
                line: i + 1,
                reason: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        };
        if fine.is_empty() || coarse.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                reason: "empty label".into(),
            });
        }
        let compound = NounCompound::new(w1, w2).map_err(|e| Error::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(LabeledCompound {
            compound,
            fine: fine.to_string(),
            coarse: coarse.to_string(),
        });
    }
    Ok(out)
}

/// Reads `item\tproperty\t1|0` lines into per-property datasets with
/// [`POSITIVE`]/[`NEGATIVE`] labels, keyed by property name.
pub fn read_properties<R: Read>(source: R) -> Result<BTreeMap<String, Vec<LabeledInstance>>> {
    let mut out: BTreeMap<String, Vec<LabeledInstance>> = BTreeMap::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| Error::Parse { line: i + 1, reason };
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let [item, property, flag] = fields[..] else {
            return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
        };
        let label = match flag {
            "1" => POSITIVE,
            "0" => NEGATIVE,
            other => return Err(err(format!("label must be 1 or 0, got `{other}`"))),
        };
        if property.is_empty() {
            return Err(err("empty property name".into()));
        }
        let item = Item::parse(item).map_err(|e| err(e.to_string()))?;
        out.entry(property.to_string()).or_default().push(LabeledInstance::new(item, label)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub grid: Vec<GridPoint>,
    pub solver: SolverConfig,
    pub seed: u64,
    pub max_split_attempts: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            grid: default_grid(),
            solver: SolverConfig::default(),
            seed: 0,
            max_split_attempts: 20,
        }
    }
}

/// Outcome of one evaluation: test metrics plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub name: String,
    pub metrics: Metrics,
    /// `None` when no classifier could be trained.
    pub selection: Option<Selection>,
    pub test_size: usize,
    /// Test items the representation could not embed.
    pub unavailable: usize,
    /// Items dropped before training (OOV, excluded labels, split discards).
    pub dropped: usize,
}

fn stratified<T: Clone>(items: &[(T, bool)], ratios: SplitRatios, seed: u64) -> [Vec<(T, bool)>; 3] {
    let mut folds: [Vec<(T, bool)>; 3] = Default::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for class in [true, false] {
        let mut group: Vec<&(T, bool)> = items.iter().filter(|(_, p)| *p == class).collect();
        group.shuffle(&mut rng);
        let (a, b, _) = ratios.sizes(group.len());
        for (k, it) in group.into_iter().enumerate() {
            let f = if k < a { 0 } else if k < a + b { 1 } else { 2 };
            folds[f].push(it.clone());
        }
    }
    folds
}

pub const WORD_SPLIT: SplitRatios = SplitRatios {
    train: 0.9,
    validation: 0.1,
    test: 0.0,
};

pub const COMPOUND_SPLIT: SplitRatios = SplitRatios {
    train: 0.2,
    validation: 0.2,
    test: 0.6,
};

/// Property prediction for each dataset. Words are split 90/10 into train and
/// validation, compounds 20/20/60 into train, validation and test, both
/// stratified by label. Word vectors come from `words`, compound vectors from
/// the provider; unembeddable test compounds count as predicted negative.
pub fn property_eval(
    words: &EmbeddingSpace,
    provider: &dyn VectorProvider,
    datasets: &BTreeMap<String, Vec<LabeledInstance>>,
    config: &EvalConfig,
) -> Result<Vec<EvalResult>> {
    datasets
        .iter()
        .map(|(name, instances)| {
            property_one(words, provider, name, instances, config)
                .map_err(|e| Error::Evaluation(format!("property `{name}`: {e}")))
        })
        .collect()
}

fn property_one(
    words: &EmbeddingSpace,
    provider: &dyn VectorProvider,
    name: &str,
    instances: &[LabeledInstance],
    config: &EvalConfig,
) -> Result<EvalResult> {
    let mut word_items = Vec::new();
    let mut compound_items = Vec::new();
    for inst in instances {
        let pos = match inst.label.as_str() {
            POSITIVE => true,
            NEGATIVE => false,
            other => return Err(Error::InvalidArgument(format!("unexpected property label `{other}`"))),
        };
        match &inst.item {
            Item::Word(w) => word_items.push((w.clone(), pos)),
            Item::Compound(nc) => compound_items.push((nc.clone(), pos)),
        }
    }
    let [wt, wv, _] = stratified(&word_items, WORD_SPLIT, sub_seed(config.seed, &format!("split:{name}:words")));
    let [ct, cv, ctest] = stratified(
        &compound_items,
        COMPOUND_SPLIT,
        sub_seed(config.seed, &format!("split:{name}:compounds")),
    );
    if !ctest.iter().any(|(_, p)| *p) {
        return Err(Error::Evaluation("no positive test instances".into()));
    }
    let label = |p: bool| if p { POSITIVE } else { NEGATIVE };
    let mut dropped = 0;
    let mut collect = |ws: &[(String, bool)], cs: &[(NounCompound, bool)]| {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (w, p) in ws {
            match words.lookup(w) {
                Some(v) => {
                    x.push(v.to_vec());
                    y.push(label(*p));
                }
                None => dropped += 1,
            }
        }
        for (nc, p) in cs {
            match provider.compound_vector(nc) {
                Some(v) => {
                    x.push(v);
                    y.push(label(*p));
                }
                None => dropped += 1,
            }
        }
        (x, y)
    };
    let (tx, ty) = collect(&wt, &ct);
    let (vx, vy) = collect(&wv, &cv);
    let gold: Vec<&str> = ctest.iter().map(|(_, p)| label(*p)).collect();
    let test_vectors: Vec<Option<Vec<f64>>> = ctest.iter().map(|(nc, _)| provider.compound_vector(nc)).collect();
    let (clf, selection) = train_classifier(
        (&tx, &ty),
        (&vx, &vy),
        &config.grid,
        &Averaging::BinaryPositive(POSITIVE.into()),
        &config.solver,
    )?;
    let mut unavailable = 0;
    let predicted: Vec<String> = test_vectors
        .iter()
        .map(|v| match v {
            Some(v) => clf.predict_one(v).map(str::to_string),
            None => {
                unavailable += 1;
                Ok(NEGATIVE.to_string())
            }
        })
        .collect::<Result<_>>()?;
    let metrics = score(&gold, &predicted.iter().map(String::as_str).collect::<Vec<_>>(), &Averaging::BinaryPositive(POSITIVE.into()))?;
    Ok(EvalResult {
        name: name.to_string(),
        metrics,
        selection: Some(selection),
        test_size: gold.len(),
        unavailable,
        dropped,
    })
}

/// Relations removed before splitting.
pub const EXCLUDED_RELATIONS: [&str; 3] = ["lexicalized", "personal_name", "personal_title"];

pub fn is_excluded_relation(label: &str) -> bool {
    let norm = label.trim().to_lowercase().replace(['-', ' '], "_");
    EXCLUDED_RELATIONS.contains(&norm.as_str())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Random,
    Lexical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelationConfig {
    pub split: SplitKind,
    pub granularity: Granularity,
    pub ratios: SplitRatios,
}

impl Default for RelationConfig {
    fn default() -> Self {
        RelationConfig {
            split: SplitKind::Random,
            granularity: Granularity::Coarse,
            ratios: SplitRatios::DEFAULT,
        }
    }
}

/// Multiclass relation classification from compound vectors alone, scored by
/// macro F1. Unembeddable test compounds are wrong predictions; if no
/// training compound is embeddable every prediction is unavailable.
pub fn relation_eval(
    provider: &dyn VectorProvider,
    data: &[LabeledCompound],
    relation: &RelationConfig,
    config: &EvalConfig,
) -> Result<EvalResult> {
    let kept: Vec<LabeledCompound> = data
        .iter()
        .filter(|lc| !is_excluded_relation(&lc.fine) && !is_excluded_relation(&lc.coarse))
        .cloned()
        .collect();
    let mut dropped = data.len() - kept.len();
    let split_seed = sub_seed(config.seed, "split");
    let (train, validation, test) = match relation.split {
        SplitKind::Random => split_compounds(&kept, relation.ratios, split_seed)?,
        SplitKind::Lexical => {
            let s = lexical_split(&kept, |lc| &lc.compound, relation.ratios, split_seed, config.max_split_attempts)?;
            dropped += s.discarded;
            (s.train, s.validation, s.test)
        }
    };
    let g = relation.granularity;
    let mut embed = |fold: &[LabeledCompound]| {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for lc in fold {
            match provider.compound_vector(&lc.compound) {
                Some(v) => {
                    x.push(v);
                    y.push(lc.label(g).to_string());
                }
                None => dropped += 1,
            }
        }
        (x, y)
    };
    let (tx, ty) = embed(&train);
    let (vx, vy) = embed(&validation);
    let gold: Vec<&str> = test.iter().map(|lc| lc.label(g)).collect();
    let classes: BTreeSet<&String> = ty.iter().collect();
    let clf = if classes.len() >= 2 {
        Some(train_classifier((&tx, &ty), (&vx, &vy), &config.grid, &Averaging::Macro, &config.solver)?)
    } else {
        log::warn!("fewer than two embeddable training classes; every test prediction is unavailable");
        None
    };
    let mut unavailable = 0;
    let predicted: Vec<String> = test
        .iter()
        .map(|lc| match (provider.compound_vector(&lc.compound), &clf) {
            (Some(v), Some((c, _))) => c.predict_one(&v).map(str::to_string),
            _ => {
                unavailable += 1;
                Ok(UNAVAILABLE.to_string())
            }
        })
        .collect::<Result<_>>()?;
    let metrics = score(&gold, &predicted.iter().map(String::as_str).collect::<Vec<_>>(), &Averaging::Macro)?;
    Ok(EvalResult {
        name: format!(
            "relation:{}:{}",
            serde_json::to_value(relation.split).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            serde_json::to_value(g).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
        ),
        metrics,
        selection: clf.map(|(_, s)| s),
        test_size: gold.len(),
        unavailable,
        dropped,
    })
}

/// Per-class TSV rows followed by a `# summary` line holding a JSON record
/// with aggregate scores and selection provenance.
pub fn write_eval_report<W: Write>(result: &EvalResult, sink: W) -> Result<()> {
    let mut out = BufWriter::new(sink);
    writeln!(out, "class\tprecision\trecall\tf1\tsupport\tpredicted")?;
    for m in &result.metrics.per_class {
        writeln!(
            out,
            "{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}",
            m.label, m.precision, m.recall, m.f1, m.support, m.predicted
        )?;
    }
    let summary = serde_json::json!({
        "name": result.name,
        "precision": result.metrics.precision,
        "recall": result.metrics.recall,
        "f1": result.metrics.f1,
        "test_size": result.test_size,
        "unavailable": result.unavailable,
        "dropped": result.dropped,
        "family": result.selection.as_ref().map(|s| s.family.name()),
        "l2": result.selection.as_ref().map(|s| s.l2),
        "validation_f1": result.selection.as_ref().map(|s| s.validation_f1),
    });
    writeln!(out, "# summary\t{summary}")?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::planted_relation_task;

    struct SumProvider<'a>(&'a EmbeddingSpace);

    impl VectorProvider for SumProvider<'_> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn compound_vector(&self, nc: &NounCompound) -> Option<Vec<f64>> {
            let (a, b) = (self.0.lookup(nc.w1())?, self.0.lookup(nc.w2())?);
            Some(a.iter().zip(b).map(|(x, y)| x + y).collect())
        }
    }

    struct Nothing;

    impl VectorProvider for Nothing {
        fn dim(&self) -> usize {
            4
        }
        fn compound_vector(&self, _: &NounCompound) -> Option<Vec<f64>> {
            None
        }
    }

    fn planted() -> (EmbeddingSpace, Vec<LabeledCompound>) {
        let task = planted_relation_task(5, 200, 800, 0, 4, 8).unwrap();
        let data = task
            .labeled
            .into_iter()
            .map(|(compound, l)| LabeledCompound {
                compound,
                fine: l.clone(),
                coarse: l,
            })
            .collect();
        (task.space, data)
    }

    #[test]
    fn planted_relations_are_recovered() {
        let (space, data) = planted();
        let r = relation_eval(&SumProvider(&space), &data, &RelationConfig::default(), &EvalConfig::default()).unwrap();
        assert!(r.metrics.f1 >= 0.9, "{:?}", r.metrics.f1);
        assert_eq!(r.unavailable, 0);
        let r = relation_eval(&Nothing, &data, &RelationConfig::default(), &EvalConfig::default()).unwrap();
        assert_eq!(r.metrics.f1, 0.0);
        assert_eq!(r.unavailable, r.test_size);
        assert!(r.selection.is_none());
    }

    #[test]
    fn excluded_relations_are_dropped() {
        assert!(is_excluded_relation("LEXICALIZED"));
        assert!(is_excluded_relation("personal-title"));
        assert!(!is_excluded_relation("purpose"));
    }

    #[test]
    fn threshold_property_is_learned() {
        let (space, data) = planted();
        let mut props: BTreeMap<String, Vec<LabeledInstance>> = BTreeMap::new();
        let mut add = |item: Item, v: Vec<f64>| {
            let label = if v[0] > 0.3 { POSITIVE } else { NEGATIVE };
            props.entry("p".into()).or_default().push(LabeledInstance::new(item, label).unwrap());
        };
        for (t, v) in space.iter() {
            add(Item::Word(t.to_string()), v.to_vec());
        }
        let provider = SumProvider(&space);
        for lc in &data {
            add(Item::Compound(lc.compound.clone()), provider.compound_vector(&lc.compound).unwrap());
        }
        let res = property_eval(&space, &provider, &props, &EvalConfig::default()).unwrap();
        assert!(res[0].metrics.f1 >= 0.95, "{}", res[0].metrics.f1);
        let none = property_eval(&space, &Nothing, &props, &EvalConfig::default()).unwrap();
        assert_eq!(none[0].metrics.f1, 0.0);
    }

    #[test]
    fn all_negative_property_errors() {
        let space = EmbeddingSpace::from_rows(1, vec![("a", vec![1.0])]).unwrap();
        let props = BTreeMap::from([(
            "p".to_string(),
            (0..10)
                .map(|i| LabeledInstance::new(Item::parse(&format!("x{i}_y")).unwrap(), NEGATIVE).unwrap())
                .collect::<Vec<_>>(),
        )]);
        assert!(matches!(property_eval(&space, &Nothing, &props, &EvalConfig::default()), Err(Error::Evaluation(_))));
    }

    #[test]
    fn loaders() {
        let lc = read_labeled_compounds("olive\toil\tsource\tcomposition\n\n".as_bytes()).unwrap();
        assert_eq!(lc[0].compound.surface(), "olive_oil");
        assert!(read_labeled_compounds("a\tb\tc\n".as_bytes()).is_err());
        let p = read_properties("car\ttransport\t1\nbaby_oil\ttransport\t0\n".as_bytes()).unwrap();
        assert_eq!(p["transport"].len(), 2);
        assert_eq!(p["transport"][1].item, Item::Compound(NounCompound::new("baby", "oil").unwrap()));
        assert!(matches!(read_properties("car\tt\tmaybe\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn report_has_summary() {
        let (space, data) = planted();
        let r = relation_eval(&SumProvider(&space), &data[..200], &RelationConfig::default(), &EvalConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_eval_report(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("class\tprecision"));
        assert!(text.lines().last().unwrap().starts_with("# summary\t{"));
    }
}
