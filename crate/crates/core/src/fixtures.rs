//! Seeded synthetic data sets with known structure, used by the examples and
//! tests: generative compound spaces, clustered paraphrase corpora,
//! planted-label relation tasks and a categorized-neighbor case.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::embeddings::{
    frequency_sidecar, synthetic_space, write_embeddings, write_frequencies, EmbeddingSpace, NounCompound,
};
use crate::error::{Error, Result};
use crate::linalg::{add_scaled, dot, norm, normalized, Matrix};
use crate::neighbors::{Category, Taxonomy};
use crate::paraphrase::{ParaphraseSet, ParaphraseSource};
use crate::train::ParaphrasePair;

/// A space holding words and observed compound vectors, plus the compounds.
#[derive(Debug, Clone)]
pub struct CompoundFixture {
    pub space: EmbeddingSpace,
    pub compounds: Vec<NounCompound>,
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| { let z: f64 = StandardNormal.sample(rng); scale * z }).collect()
}

fn word_names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Distinct ordered pairs `(w1, w2)` with `w1 ≠ w2`, in sampling order.
pub fn random_compounds(rng: &mut ChaCha8Rng, words: &[String], n: usize) -> Vec<NounCompound> {
    assert!(words.len() >= 2 && n <= words.len() * (words.len() - 1));
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let a = rng.gen_range(0..words.len());
        let b = rng.gen_range(0..words.len());
        if a != b && seen.insert((a, b)) {
            out.push(NounCompound::new(&words[a], &words[b]).expect("fixture words are valid"));
        }
    }
    out
}

/// Words `w0..` with standard-normal vectors and `n_compounds` compounds whose
/// observed vectors are `generator(v1, v2)`. Compound frequencies are drawn
/// from 1..=500 and stored in the space.
pub fn generative_fixture<F>(seed: u64, n_words: usize, n_compounds: usize, dim: usize, generator: F) -> Result<CompoundFixture>
where
    F: Fn(&[f64], &[f64]) -> Vec<f64>,
{
    let words = word_names("w", n_words);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word_freqs: HashMap<String, u64> = words.iter().map(|w| (w.clone(), rng.gen_range(1..=1000))).collect();
    let base = synthetic_space(seed, &words, dim, &word_freqs)?;
    let compounds = random_compounds(&mut rng, &words, n_compounds);
    let mut rows: Vec<(String, Vec<f64>)> = base.iter().map(|(t, v)| (t.to_string(), v.to_vec())).collect();
    let mut freqs = base.frequencies().clone();
    let mut out = Vec::with_capacity(compounds.len());
    for nc in compounds {
        let v = generator(base.lookup(nc.w1()).unwrap(), base.lookup(nc.w2()).unwrap());
        let f = rng.gen_range(1..=500);
        freqs.insert(nc.surface().to_string(), f);
        rows.push((nc.surface().to_string(), v));
        out.push(nc.with_frequency(f));
    }
    let space = EmbeddingSpace::from_rows(dim, rows)?.with_frequencies(freqs);
    Ok(CompoundFixture { space, compounds: out })
}

/// Observed vector = `v1 + v2`.
pub fn additive_fixture(seed: u64, n_words: usize, n_compounds: usize, dim: usize) -> Result<CompoundFixture> {
    generative_fixture(seed, n_words, n_compounds, dim, |a, b| a.iter().zip(b).map(|(x, y)| x + y).collect())
}

/// Observed vector = `W1* v1 + W2* v2` for hidden matrices with
/// `N(0, 1/d)` entries, returned alongside the fixture.
pub fn fulladd_fixture(
    seed: u64,
    n_words: usize,
    n_compounds: usize,
    dim: usize,
) -> Result<(CompoundFixture, Matrix, Matrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let scale = 1.0 / (dim as f64).sqrt();
    let w1 = Matrix::from_vec(dim, dim, gaussian(&mut rng, dim * dim, scale))?;
    let w2 = Matrix::from_vec(dim, dim, gaussian(&mut rng, dim * dim, scale))?;
    let fx = generative_fixture(seed, n_words, n_compounds, dim, |a, b| {
        w1.matvec(a).iter().zip(w2.matvec(b)).map(|(x, y)| x + y).collect()
    })?;
    Ok((fx, w1, w2))
}

/// Compounds `m{k} h{k}` whose constituents and paraphrase words all sit near
/// a per-compound latent direction; paraphrases are 3-5 tokens mixing
/// cluster words with shared connectors.
#[derive(Debug, Clone)]
pub struct ParaphraseFixture {
    pub space: EmbeddingSpace,
    pub pairs: Vec<ParaphrasePair>,
}

pub fn clustered_paraphrase_fixture(seed: u64, n_compounds: usize, dim: usize) -> Result<ParaphraseFixture> {
    const CONNECTORS: [&str; 4] = ["of", "for", "made", "with"];
    const CLUSTER_WORDS: usize = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = 0.35 / (dim as f64).sqrt();
    let mut rows = Vec::new();
    for c in CONNECTORS {
        rows.push((c.to_string(), gaussian(&mut rng, dim, 1.0 / (dim as f64).sqrt())));
    }
    let mut pairs = Vec::new();
    for k in 0..n_compounds {
        let center = normalized(&gaussian(&mut rng, dim, 1.0));
        let near = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            center.iter().zip(gaussian(rng, dim, noise)).map(|(c, n)| c + n).collect()
        };
        let (m, h) = (format!("m{k}"), format!("h{k}"));
        rows.push((m.clone(), near(&mut rng)));
        rows.push((h.clone(), near(&mut rng)));
        let cluster: Vec<String> = (0..CLUSTER_WORDS).map(|j| format!("p{k}x{j}")).collect();
        for w in &cluster {
            rows.push((w.clone(), near(&mut rng)));
        }
        let nc = NounCompound::new(&m, &h)?;
        for _ in 0..3 {
            let len = rng.gen_range(3..=5);
            let mut tokens: Vec<String> = cluster.choose_multiple(&mut rng, len - 1).cloned().collect();
            let at = rng.gen_range(0..tokens.len());
            tokens.insert(at, CONNECTORS[rng.gen_range(0..CONNECTORS.len())].to_string());
            pairs.push(ParaphrasePair {
                compound: nc.clone(),
                paraphrase: tokens,
            });
        }
    }
    Ok(ParaphraseFixture {
        space: EmbeddingSpace::from_rows(dim, rows)?,
        pairs,
    })
}

/// A labeled compound relation task: the label of `w1 w2` is the index of the
/// planted orthonormal direction with the largest dot product with `v1 + v2`.
#[derive(Debug, Clone)]
pub struct PlantedTask {
    /// Words only; compound surfaces are deliberately absent.
    pub space: EmbeddingSpace,
    /// Compounds with observed `v1 + v2` vectors, for training composition.
    pub training_space: EmbeddingSpace,
    pub training_compounds: Vec<NounCompound>,
    pub labeled: Vec<(NounCompound, String)>,
    pub directions: Vec<Vec<f64>>,
}

pub fn planted_relation_task(
    seed: u64,
    n_words: usize,
    n_labeled: usize,
    n_training: usize,
    n_classes: usize,
    dim: usize,
) -> Result<PlantedTask> {
    let fx = additive_fixture(seed, n_words, n_labeled + n_training, dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd1ec);
    if n_classes > dim {
        return Err(Error::InvalidArgument(format!("{n_classes} orthogonal directions need dim >= {n_classes}")));
    }
    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(n_classes);
    while directions.len() < n_classes {
        let mut v = gaussian(&mut rng, dim, 1.0);
        for d in &directions {
            let p = dot(&v, d);
            add_scaled(&mut v, -p, d);
        }
        if norm(&v) > 1e-6 {
            directions.push(normalized(&v));
        }
    }
    let (labeled_nc, training) = fx.compounds.split_at(n_labeled);
    let labeled = labeled_nc
        .iter()
        .map(|nc| {
            let v = fx.space.lookup(nc.surface()).unwrap();
            let best = (0..n_classes)
                .max_by(|&a, &b| dot(v, &directions[a]).total_cmp(&dot(v, &directions[b])))
                .unwrap();
            (nc.clone(), format!("rel{best}"))
        })
        .collect();
    let words: Vec<(String, Vec<f64>)> = fx
        .space
        .iter()
        .filter(|(t, _)| !t.contains('_'))
        .map(|(t, v)| (t.to_string(), v.to_vec()))
        .collect();
    let mut with_training = words.clone();
    let labeled_set: BTreeSet<&str> = labeled_nc.iter().map(NounCompound::surface).collect();
    with_training.extend(
        fx.space
            .iter()
            .filter(|(t, _)| t.contains('_') && !labeled_set.contains(t))
            .map(|(t, v)| (t.to_string(), v.to_vec())),
    );
    let freqs = fx.space.frequencies().clone();
    Ok(PlantedTask {
        space: EmbeddingSpace::from_rows(dim, words)?.with_frequencies(freqs.clone()),
        training_space: EmbeddingSpace::from_rows(dim, with_training)?.with_frequencies(freqs),
        training_compounds: training.to_vec(),
        labeled,
        directions,
    })
}

/// Paths written by [`PlantedTask::write_inputs`].
#[derive(Debug, Clone)]
pub struct PlantedFiles {
    /// Training space with its `.freq` sidecar.
    pub embeddings: PathBuf,
    pub compounds: PathBuf,
    pub relations: PathBuf,
}

impl PlantedTask {
    /// Writes the training space, the training compounds and the labeled
    /// compounds (label as both fine and coarse relation) into `dir`.
    pub fn write_inputs(&self, dir: &Path) -> Result<PlantedFiles> {
        let files = PlantedFiles {
            embeddings: dir.join("planted.vec"),
            compounds: dir.join("compounds.tsv"),
            relations: dir.join("relations.tsv"),
        };
        write_embeddings(&self.training_space, File::create(&files.embeddings)?)?;
        write_frequencies(&self.training_space, File::create(frequency_sidecar(&files.embeddings))?)?;
        let mut out = BufWriter::new(File::create(&files.compounds)?);
        for nc in &self.training_compounds {
            writeln!(out, "{}\t{}", nc.w1(), nc.w2())?;
        }
        out.flush()?;
        let mut out = BufWriter::new(File::create(&files.relations)?);
        for (nc, label) in &self.labeled {
            writeln!(out, "{}\t{}\t{label}\t{label}", nc.w1(), nc.w2())?;
        }
        out.flush()?;
        Ok(files)
    }
}

/// The "street level" neighbor fixture: eight neighbors of `street_level`, one
/// or more per category, with strictly decreasing similarity.
#[derive(Debug, Clone)]
pub struct StreetLevelFixture {
    pub space: EmbeddingSpace,
    pub target: NounCompound,
    pub backtranslation: HashMap<String, ParaphraseSet>,
    pub taxonomy: Taxonomy,
    /// Neighbor tokens in rank order with their expected category.
    pub expected: Vec<(String, Category)>,
}

pub fn street_level_fixture() -> Result<StreetLevelFixture> {
    let expected = [
        ("streetlevel", Category::RareWord),
        ("ground_floor", Category::BacktransParaphrase),
        ("street", Category::SharedConstituent),
        ("level", Category::SharedConstituent),
        ("sea_level", Category::SharedConstituent),
        ("pavement", Category::WordNetSimilar),
        ("parking_garage", Category::OtherCompound),
        ("stairs", Category::OtherWord),
    ];
    let dim = expected.len() + 1;
    let axis = |i: usize, scale: f64| {
        let mut v = vec![0.0; dim];
        v[0] = 1.0;
        v[i] = scale;
        v
    };
    let mut rows = vec![("street_level".to_string(), axis(0, 1.0))];
    let mut freqs = HashMap::from([("street_level".to_string(), 40)]);
    for (i, (token, category)) in expected.iter().enumerate() {
        rows.push((token.to_string(), axis(i + 1, 0.1 * (i + 1) as f64)));
        freqs.insert(token.to_string(), if *category == Category::RareWord { 3 } else { 120 });
    }
    let space = EmbeddingSpace::from_rows(dim, rows)?.with_frequencies(freqs);
    let target = NounCompound::new("street", "level")?.with_frequency(40);
    let set = ParaphraseSet {
        compound: target.clone(),
        paraphrases: vec![vec!["ground".into(), "floor".into()], vec!["level".into(), "of".into(), "the".into(), "street".into()]],
        source: ParaphraseSource::Backtranslation,
        raw_count: 3,
    };
    let backtranslation = HashMap::from([(target.surface().to_string(), set)]);
    let edge = |c: &str, p: Option<&str>| (c.to_string(), p.map(str::to_string));
    let taxonomy = Taxonomy::new(
        &[
            edge("entity.n.01", None),
            edge("location.n.01", Some("entity.n.01")),
            edge("surface.n.01", Some("location.n.01")),
            edge("street_level.n.01", Some("surface.n.01")),
            edge("pavement.n.01", Some("surface.n.01")),
            edge("artifact.n.01", Some("entity.n.01")),
            edge("structure.n.01", Some("artifact.n.01")),
            edge("stairs.n.01", Some("structure.n.01")),
        ],
        &[
            ("street_level".into(), "street_level.n.01".into()),
            ("pavement".into(), "pavement.n.01".into()),
            ("stairs".into(), "stairs.n.01".into()),
        ],
    )?;
    Ok(StreetLevelFixture {
        space,
        target,
        backtranslation,
        taxonomy,
        expected: expected.iter().map(|(t, c)| (t.to_string(), *c)).collect(),
    })
}
