//! End-to-end orchestration: building vector providers for each
//! representation over an embedding space, and running grids of
//! (embedding space × representation × seed) cells through the evaluations.

mod grid;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::compose::{CompositionModel, ModelKind};
use crate::embeddings::{EmbeddingSpace, NounCompound};
use crate::error::{Error, Result};
use crate::eval::VectorProvider;
use crate::linalg::normalized;
use crate::seeds::sub_seed;
use crate::train::{split_compounds, train_compositional, train_paraphrase, ParaphrasePair, SplitRatios, TrainConfig, Trained};

pub use grid::{
    aggregate, read_cells, run_grid, AggregateReport, AggregateRow, BestRow, CellRecord, CellRow, CellStatus,
    DsmGridSpec, EmbeddingSpec, GridOutcome, NeighborsConfig, Task,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepresentationKind {
    Distributional,
    Add,
    FullAdd,
    Matrix,
    Lstm,
    Cooccurrence,
    Backtranslation,
    /// Control: an independent random vector per compound.
    Random,
}

impl RepresentationKind {
    pub const ALL: [RepresentationKind; 8] = [
        RepresentationKind::Distributional,
        RepresentationKind::Add,
        RepresentationKind::FullAdd,
        RepresentationKind::Matrix,
        RepresentationKind::Lstm,
        RepresentationKind::Cooccurrence,
        RepresentationKind::Backtranslation,
        RepresentationKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RepresentationKind::Distributional => "distributional",
            RepresentationKind::Add => "add",
            RepresentationKind::FullAdd => "fulladd",
            RepresentationKind::Matrix => "matrix",
            RepresentationKind::Lstm => "lstm",
            RepresentationKind::Cooccurrence => "cooccurrence",
            RepresentationKind::Backtranslation => "backtranslation",
            RepresentationKind::Random => "random",
        }
    }

    pub fn is_paraphrase(self) -> bool {
        matches!(self, RepresentationKind::Cooccurrence | RepresentationKind::Backtranslation)
    }

    pub fn composition_kind(self) -> Option<ModelKind> {
        match self {
            RepresentationKind::Add => Some(ModelKind::Add),
            RepresentationKind::FullAdd => Some(ModelKind::FullAdd),
            RepresentationKind::Matrix => Some(ModelKind::Matrix),
            RepresentationKind::Lstm => Some(ModelKind::Lstm),
            _ => None,
        }
    }

    pub fn is_trained(self) -> bool {
        self.is_paraphrase() || self.composition_kind().is_some()
    }
}

impl fmt::Display for RepresentationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RepresentationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RepresentationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown representation `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationSpec {
    pub kind: RepresentationKind,
    /// Defaults to the kind's name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Training overrides; defaults depend on the objective.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    /// Paraphrase file, for paraphrase kinds only: a co-occurrence TSV or a
    /// backtranslation set file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paraphrases: Option<PathBuf>,
}

impl RepresentationSpec {
    pub fn new(kind: RepresentationKind) -> Self {
        RepresentationSpec {
            kind,
            name: None,
            train: None,
            paraphrases: None,
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.name().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.is_paraphrase() != self.paraphrases.is_some() {
            return Err(Error::Config(format!(
                "representation `{}`: a paraphrase file is required for paraphrase kinds and only for them",
                self.label()
            )));
        }
        if !self.kind.is_trained() && self.train.is_some() {
            return Err(Error::Config(format!("representation `{}` takes no training config", self.label())));
        }
        if self.name.as_deref().is_some_and(|n| n.trim().is_empty() || n.contains(char::is_whitespace)) {
            return Err(Error::Config("representation names must be non-empty without whitespace".into()));
        }
        if let Some(t) = &self.train {
            t.validate()?;
        }
        Ok(())
    }

    /// Effective training config with `seed` substituted.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let base = self.train.clone().unwrap_or_else(|| {
            if self.kind.is_paraphrase() {
                TrainConfig::paraphrase()
            } else {
                TrainConfig::compositional()
            }
        });
        TrainConfig { seed, ..base }
    }
}

/// A ready-to-query compound vector provider.
#[derive(Debug, Clone)]
pub enum Representation {
    Distributional(Arc<EmbeddingSpace>),
    Composed {
        model: CompositionModel,
        space: Arc<EmbeddingSpace>,
        normalize: bool,
    },
    Random {
        dim: usize,
        seed: u64,
    },
}

impl VectorProvider for Representation {
    fn dim(&self) -> usize {
        match self {
            Representation::Distributional(s) => s.dim(),
            Representation::Composed { model, .. } => model.dim(),
            Representation::Random { dim, .. } => *dim,
        }
    }

    fn compound_vector(&self, nc: &NounCompound) -> Option<Vec<f64>> {
        match self {
            Representation::Distributional(space) => space.lookup(nc.surface()).map(<[f64]>::to_vec),
            Representation::Composed { model, space, normalize } => {
                let prep = |v: &[f64]| if *normalize { normalized(v) } else { v.to_vec() };
                let v1 = prep(space.lookup(nc.w1())?);
                let v2 = prep(space.lookup(nc.w2())?);
                model.encode(&[&v1, &v2]).ok()
            }
            Representation::Random { dim, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(*seed, nc.surface()));
                Some((0..*dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            }
        }
    }
}

/// A representation plus its training outcome, when it has one.
#[derive(Debug, Clone)]
pub struct Built {
    pub representation: Representation,
    pub trained: Option<Trained>,
}

/// Fraction of training compounds held out for epoch selection.
pub const SELECTION_SPLIT: SplitRatios = SplitRatios {
    train: 0.9,
    validation: 0.1,
    test: 0.0,
};

/// Builds the provider for `spec`. Compositional kinds train on `compounds`
/// (those with observed vectors in `space`); paraphrase kinds train an LSTM
/// encoder on `paraphrases`. Errors carry the representation name.
pub fn build_representation(
    spec: &RepresentationSpec,
    space: Arc<EmbeddingSpace>,
    compounds: &[NounCompound],
    paraphrases: Option<&[ParaphrasePair]>,
    seed: u64,
) -> Result<Built> {
    let wrap = |e: Error| Error::Representation {
        representation: spec.label(),
        source: Box::new(e),
    };
    spec.validate().map_err(wrap)?;
    let config = spec.train_config(seed);
    let trained = match spec.kind {
        RepresentationKind::Distributional => {
            return Ok(Built {
                representation: Representation::Distributional(space),
                trained: None,
            })
        }
        RepresentationKind::Random => {
            return Ok(Built {
                representation: Representation::Random {
                    dim: space.dim(),
                    seed: sub_seed(seed, "random-baseline"),
                },
                trained: None,
            })
        }
        RepresentationKind::Cooccurrence | RepresentationKind::Backtranslation => {
            let pairs = paraphrases
                .ok_or_else(|| wrap(Error::Config("paraphrase pairs were not loaded".into())))?;
            train_paraphrase(&space, pairs, &[], &config).map_err(wrap)?
        }
        kind => {
            let model_kind = kind.composition_kind().expect("compositional kind");
            let observed: Vec<NounCompound> = compounds
                .iter()
                .filter(|nc| space.contains(nc.surface()))
                .cloned()
                .collect();
            let (train, validation) = if observed.len() >= 3 {
                let (t, v, _) = split_compounds(&observed, SELECTION_SPLIT, sub_seed(seed, "selection-split")).map_err(wrap)?;
                (t, v)
            } else {
                (observed, Vec::new())
            };
            train_compositional(&space, &train, &validation, model_kind, &config).map_err(wrap)?
        }
    };
    Ok(Built {
        representation: Representation::Composed {
            model: trained.model.clone(),
            space,
            normalize: config.normalize_inputs,
        },
        trained: Some(trained),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::additive_fixture;
    use crate::linalg::cosine;

    #[test]
    fn distributional_lookup_and_oov() {
        let fx = additive_fixture(1, 20, 30, 4).unwrap();
        let space = Arc::new(fx.space.clone());
        let b = build_representation(&RepresentationSpec::new(RepresentationKind::Distributional), space, &[], None, 0).unwrap();
        let nc = &fx.compounds[0];
        assert_eq!(b.representation.compound_vector(nc).unwrap(), fx.space.lookup(nc.surface()).unwrap());
        assert!(b.representation.compound_vector(&NounCompound::new("w0", "zzz").unwrap()).is_none());
    }

    #[test]
    fn trained_add_tracks_the_sum() {
        let fx = additive_fixture(2, 60, 200, 6).unwrap();
        let spec = RepresentationSpec {
            train: Some(TrainConfig {
                learning_rate: 0.3,
                epochs: 30,
                ..TrainConfig::compositional()
            }),
            ..RepresentationSpec::new(RepresentationKind::Add)
        };
        let b = build_representation(&spec, Arc::new(fx.space.clone()), &fx.compounds, None, 3).unwrap();
        for nc in &fx.compounds {
            let v = b.representation.compound_vector(nc).unwrap();
            assert!(cosine(&v, fx.space.lookup(nc.surface()).unwrap()).unwrap() > 0.99);
        }
        // ad-hoc composition works for unseen pairs of known words
        let unseen = NounCompound::new("w1", "w2").unwrap();
        assert!(b.representation.compound_vector(&unseen).is_some());
    }

    #[test]
    fn random_baseline_is_stable_per_compound() {
        let r = Representation::Random { dim: 5, seed: 9 };
        let a = NounCompound::new("a", "b").unwrap();
        assert_eq!(r.compound_vector(&a), r.compound_vector(&a));
        assert_ne!(r.compound_vector(&a), r.compound_vector(&NounCompound::new("b", "a").unwrap()));
    }

    #[test]
    fn spec_invariants() {
        let mut spec = RepresentationSpec::new(RepresentationKind::Cooccurrence);
        assert!(spec.validate().is_err());
        spec.paraphrases = Some("p.tsv".into());
        assert!(spec.validate().is_ok());
        let mut d = RepresentationSpec::new(RepresentationKind::Distributional);
        d.paraphrases = Some("p.tsv".into());
        assert!(d.validate().is_err());
        let err = build_representation(&d, Arc::new(EmbeddingSpace::empty(2).unwrap()), &[], None, 0).unwrap_err();
        assert!(err.to_string().starts_with("distributional:"), "{err}");
        assert_eq!("fulladd".parse::<RepresentationKind>().unwrap(), RepresentationKind::FullAdd);
    }
}
