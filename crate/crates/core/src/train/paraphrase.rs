use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{batch_loss, margin_loss, Batch, EpochRunner, TrainConfig, Trained};
use crate::compose::{init_model, CompositionModel, ModelKind};
use crate::embeddings::{EmbeddingSpace, NounCompound};
use crate::error::{Error, Result};
use crate::linalg::{cosine, normalized};
use crate::seeds::sub_seed;

/// A compound and one of its paraphrases, as tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParaphrasePair {
    pub compound: NounCompound,
    pub paraphrase: Vec<String>,
}

/// Vector sequences for the compound, its paraphrase and a negative paraphrase.
#[derive(Debug, Clone, PartialEq)]
pub struct ParaphraseTriple {
    pub compound: Vec<Vec<f64>>,
    pub positive: Vec<Vec<f64>>,
    pub negative: Vec<Vec<f64>>,
}

struct Resolved {
    group: usize,
    compound: Vec<Vec<f64>>,
    paraphrase: Vec<Vec<f64>>,
}

/// Maps pairs to vectors. Pairs with an OOV constituent, or whose paraphrase
/// is empty once OOV tokens are dropped, are excluded.
fn resolve(
    space: &EmbeddingSpace,
    pairs: &[ParaphrasePair],
    normalize: bool,
    groups: &mut HashMap<String, usize>,
) -> (Vec<Resolved>, usize) {
    let prep = |v: &[f64]| if normalize { normalized(v) } else { v.to_vec() };
    let mut out = Vec::new();
    let mut excluded = 0;
    for pair in pairs {
        let (Some(a), Some(b)) = (space.lookup(pair.compound.w1()), space.lookup(pair.compound.w2())) else {
            excluded += 1;
            continue;
        };
        let paraphrase: Vec<Vec<f64>> = pair.paraphrase.iter().filter_map(|t| space.lookup(t)).map(prep).collect();
        if paraphrase.is_empty() {
            excluded += 1;
            continue;
        }
        let next = groups.len();
        let group = *groups.entry(pair.compound.surface().to_string()).or_insert(next);
        out.push(Resolved {
            group,
            compound: vec![prep(a), prep(b)],
            paraphrase,
        });
    }
    (out, excluded)
}

fn sample_negative<'a>(rng: &mut ChaCha8Rng, pool: &'a [Resolved], group: usize) -> &'a Resolved {
    loop {
        let cand = &pool[rng.gen_range(0..pool.len())];
        if cand.group != group {
            return cand;
        }
    }
}

fn triples_for(rng: &mut ChaCha8Rng, items: &[&Resolved], pool: &[Resolved], per_positive: usize) -> Vec<ParaphraseTriple> {
    let mut out = Vec::with_capacity(items.len() * per_positive);
    for item in items {
        for _ in 0..per_positive {
            let neg = sample_negative(rng, pool, item.group);
            out.push(ParaphraseTriple {
                compound: item.compound.clone(),
                positive: item.paraphrase.clone(),
                negative: neg.paraphrase.clone(),
            });
        }
    }
    out
}

fn distinct_groups(items: &[Resolved]) -> usize {
    let mut g: Vec<usize> = items.iter().map(|r| r.group).collect();
    g.sort_unstable();
    g.dedup();
    g.len()
}

/// Trains one LSTM shared by compounds and paraphrases under the margin
/// objective; negatives are re-sampled from other compounds every epoch.
pub fn train_paraphrase(
    space: &EmbeddingSpace,
    train: &[ParaphrasePair],
    validation: &[ParaphrasePair],
    config: &TrainConfig,
) -> Result<Trained> {
    config.validate()?;
    let mut groups = HashMap::new();
    let (train_items, ex_t) = resolve(space, train, config.normalize_inputs, &mut groups);
    let (val_items, ex_v) = resolve(space, validation, config.normalize_inputs, &mut groups);
    let excluded = ex_t + ex_v;
    if excluded > 0 {
        log::info!("excluded {excluded} paraphrase pairs with out-of-vocabulary tokens");
    }
    if distinct_groups(&train_items) < 2 {
        return Err(Error::Training(
            "need paraphrases for at least 2 distinct compounds to draw negatives".into(),
        ));
    }

    let mut pool: Vec<Resolved> = Vec::with_capacity(train_items.len() + val_items.len());
    let n_train = train_items.len();
    pool.extend(train_items);
    pool.extend(val_items);

    let mut val_rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, "validation"));
    let selection_items: Vec<&Resolved> = if pool.len() > n_train {
        pool[n_train..].iter().collect()
    } else {
        pool.iter().collect()
    };
    let selection = Batch::Paraphrase(triples_for(&mut val_rng, &selection_items, &pool, config.negatives_per_positive));

    let model = init_model(ModelKind::Lstm, space.dim(), sub_seed(config.seed, "init"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, "sampling"));
    let mut order: Vec<usize> = (0..n_train).collect();
    let train_pool = &pool[..n_train];
    let (model, history) = EpochRunner { config }.run(
        model,
        |_| {
            order.shuffle(&mut rng);
            let items: Vec<&Resolved> = order.iter().map(|&i| &train_pool[i]).collect();
            let triples = triples_for(&mut rng, &items, train_pool, config.negatives_per_positive);
            Ok(triples
                .chunks(config.batch_size)
                .map(|c| Batch::Paraphrase(c.to_vec()))
                .collect())
        },
        |m| batch_loss(m, &selection, config),
    )?;
    Ok(Trained {
        model,
        history,
        excluded,
    })
}

/// How well an encoder separates paraphrases from sampled negatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separation {
    /// Fraction of triples with `cos(nc, p) ≥ cos(nc, neg)`.
    pub ordered_fraction: f64,
    pub mean_loss: f64,
    pub triples: usize,
}

/// Samples `negatives_per_positive` negatives per pair (seeded) and measures
/// ordering and mean margin loss under `model`.
pub fn paraphrase_separation(
    model: &CompositionModel,
    space: &EmbeddingSpace,
    pairs: &[ParaphrasePair],
    config: &TrainConfig,
    seed: u64,
) -> Result<Separation> {
    let mut groups = HashMap::new();
    let (items, _) = resolve(space, pairs, config.normalize_inputs, &mut groups);
    if distinct_groups(&items) < 2 {
        return Err(Error::InvalidArgument("need at least 2 distinct compounds".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let refs: Vec<&Resolved> = items.iter().collect();
    let triples = triples_for(&mut rng, &refs, &items, config.negatives_per_positive);
    let mut ordered = 0usize;
    let mut total = 0.0;
    let enc = |seq: &[Vec<f64>]| model.encode(&seq.iter().map(Vec::as_slice).collect::<Vec<_>>());
    for t in &triples {
        let a = enc(&t.compound)?;
        let p = enc(&t.positive)?;
        let n = enc(&t.negative)?;
        let degenerate = || Error::Degenerate("zero-norm encoding".into());
        if cosine(&a, &p).ok_or_else(degenerate)? >= cosine(&a, &n).ok_or_else(degenerate)? {
            ordered += 1;
        }
        total += margin_loss(&a, &p, &n, config.margin)?;
    }
    Ok(Separation {
        ordered_fraction: ordered as f64 / triples.len() as f64,
        mean_loss: total / triples.len() as f64,
        triples: triples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::clustered_paraphrase_fixture;

    #[test]
    fn single_compound_has_no_negatives() {
        let fx = clustered_paraphrase_fixture(1, 3, 8).unwrap();
        let first = fx.pairs[0].compound.clone();
        let only: Vec<ParaphrasePair> = fx.pairs.iter().filter(|p| p.compound == first).cloned().collect();
        let err = train_paraphrase(&fx.space, &only, &[], &TrainConfig::paraphrase());
        assert!(matches!(err, Err(Error::Training(_))));
    }

    #[test]
    fn oov_paraphrase_tokens_are_dropped() {
        let fx = clustered_paraphrase_fixture(2, 4, 8).unwrap();
        let mut pairs = fx.pairs.clone();
        pairs.push(ParaphrasePair {
            compound: fx.pairs[0].compound.clone(),
            paraphrase: vec!["unknown".into(), "tokens".into(), "only".into()],
        });
        let cfg = TrainConfig {
            epochs: 1,
            ..TrainConfig::paraphrase()
        };
        let out = train_paraphrase(&fx.space, &pairs, &[], &cfg).unwrap();
        assert_eq!(out.excluded, 1);
    }

    #[test]
    fn training_is_deterministic_and_improves() {
        let fx = clustered_paraphrase_fixture(3, 8, 12).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::paraphrase()
        };
        let a = train_paraphrase(&fx.space, &fx.pairs, &[], &cfg).unwrap();
        let b = train_paraphrase(&fx.space, &fx.pairs, &[], &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.history, b.history);
        let h = &a.history;
        assert!(h.validation_loss[h.selected_epoch.unwrap()] <= h.validation_loss[0]);
    }
}
