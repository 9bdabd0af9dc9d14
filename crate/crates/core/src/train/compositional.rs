use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{batch_loss, Batch, EpochRunner, TrainConfig, Trained};
use crate::compose::{init_model, ModelKind};
use crate::embeddings::{EmbeddingSpace, NounCompound};
use crate::error::{Error, Result};
use crate::linalg::normalized;
use crate::seeds::sub_seed;

/// Frozen constituent vectors and the observed compound vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionalExample {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub observed: Vec<f64>,
}

/// Builds examples for compounds whose constituents and surface token are all
/// in `space`; returns them with the number of excluded compounds.
pub fn compositional_examples(
    space: &EmbeddingSpace,
    compounds: &[NounCompound],
    normalize: bool,
) -> (Vec<CompositionalExample>, usize) {
    let prep = |v: &[f64]| if normalize { normalized(v) } else { v.to_vec() };
    let mut excluded = 0;
    let mut out = Vec::with_capacity(compounds.len());
    for nc in compounds {
        match (space.lookup(nc.w1()), space.lookup(nc.w2()), space.lookup(nc.surface())) {
            (Some(a), Some(b), Some(o)) => out.push(CompositionalExample {
                v1: prep(a),
                v2: prep(b),
                observed: prep(o),
            }),
            _ => excluded += 1,
        }
    }
    (out, excluded)
}

/// Fits `kind` so that `f(v_w1, v_w2)` approximates the observed vector of
/// `w1_w2`; keeps the parameters of the best validation epoch. The space is
/// only read.
pub fn train_compositional(
    space: &EmbeddingSpace,
    train: &[NounCompound],
    validation: &[NounCompound],
    kind: ModelKind,
    config: &TrainConfig,
) -> Result<Trained> {
    config.validate()?;
    let (train_ex, excluded_train) = compositional_examples(space, train, config.normalize_inputs);
    let (val_ex, excluded_val) = compositional_examples(space, validation, config.normalize_inputs);
    let excluded = excluded_train + excluded_val;
    if excluded > 0 {
        log::info!("excluded {excluded} compounds with out-of-vocabulary constituents or surface");
    }
    if train_ex.is_empty() {
        return Err(Error::Training("no training compound is fully in vocabulary".into()));
    }
    let model = init_model(kind, space.dim(), sub_seed(config.seed, "init"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, "shuffle"));
    let mut order: Vec<usize> = (0..train_ex.len()).collect();
    let selection = if val_ex.is_empty() {
        Batch::Compositional(train_ex.clone())
    } else {
        Batch::Compositional(val_ex)
    };
    let (model, history) = EpochRunner { config }.run(
        model,
        |_| {
            order.shuffle(&mut rng);
            Ok(order
                .chunks(config.batch_size)
                .map(|chunk| Batch::Compositional(chunk.iter().map(|&i| train_ex[i].clone()).collect()))
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
