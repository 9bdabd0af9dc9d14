use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embeddings::NounCompound;
use crate::error::{Error, Result};
use crate::seeds::sub_seed;
use crate::train::SplitRatios;

/// Folds with no constituent shared between any two of them.
#[derive(Debug, Clone, PartialEq)]
pub struct LexicalSplit<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
    /// Compounds whose constituents landed in different folds.
    pub discarded: usize,
    /// 1-based attempt that succeeded.
    pub attempt: usize,
}

impl<T> LexicalSplit<T> {
    pub fn folds(&self) -> [&[T]; 3] {
        [&self.train, &self.validation, &self.test]
    }
}

struct Attempt {
    folds: [Vec<usize>; 3],
    discarded: usize,
}

/// One randomized greedy pass. Compounds are visited in shuffled order; a
/// compound with two fresh constituents claims both for the fold furthest
/// below its target share, a compound with one placed constituent pulls the
/// other into that fold, and a compound whose constituents sit in different
/// folds is discarded.
fn attempt(compounds: &[&NounCompound], ratios: &[f64; 3], seed: u64) -> Attempt {
    let mut order: Vec<usize> = (0..compounds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut owner: HashMap<&str, usize> = HashMap::new();
    let mut folds: [Vec<usize>; 3] = Default::default();
    let mut discarded = 0;
    for i in order {
        let nc = compounds[i];
        let fold = match (owner.get(nc.w1()).copied(), owner.get(nc.w2()).copied()) {
            (Some(a), Some(b)) if a != b => {
                discarded += 1;
                continue;
            }
            (Some(f), _) | (_, Some(f)) => f,
            (None, None) => (0..3)
                .filter(|&f| ratios[f] > 0.0)
                .min_by(|&a, &b| {
                    let fill = |f: usize| folds[f].len() as f64 / ratios[f];
                    fill(a).total_cmp(&fill(b))
                })
                .expect("some ratio is positive"),
        };
        owner.insert(nc.w1(), fold);
        owner.insert(nc.w2(), fold);
        folds[fold].push(i);
    }
    Attempt { folds, discarded }
}

/// Splits compounds so the three folds share no constituent. Retries with
/// derived seeds until every fold with a positive ratio is non-empty and at
/// least half the compounds are retained.
pub fn lexical_split<T: Clone>(
    items: &[T],
    compound: impl Fn(&T) -> &NounCompound,
    ratios: SplitRatios,
    seed: u64,
    max_attempts: usize,
) -> Result<LexicalSplit<T>> {
    ratios.validate()?;
    if items.is_empty() || max_attempts == 0 {
        return Err(Error::SplitFailed("no items or no attempts allowed".into()));
    }
    let compounds: Vec<&NounCompound> = items.iter().map(&compound).collect();
    let r = [ratios.train, ratios.validation, ratios.test];
    let mut diagnostics = Vec::new();
    for n in 1..=max_attempts {
        let a = attempt(&compounds, &r, sub_seed(seed, &format!("lexical{n}")));
        let retained = compounds.len() - a.discarded;
        let empty: Vec<&str> = (0..3)
            .filter(|&f| r[f] > 0.0 && a.folds[f].is_empty())
            .map(|f| ["train", "validation", "test"][f])
            .collect();
        if empty.is_empty() && 2 * retained >= compounds.len() {
            let pick = |f: usize| {
                let mut idx = a.folds[f].clone();
                idx.sort_unstable();
                idx.into_iter().map(|i| items[i].clone()).collect()
            };
            return Ok(LexicalSplit {
                train: pick(0),
                validation: pick(1),
                test: pick(2),
                discarded: a.discarded,
                attempt: n,
            });
        }
        diagnostics.push(format!(
            "attempt {n}: retained {retained}/{}, empty folds [{}]",
            compounds.len(),
            empty.join(", ")
        ));
    }
    let distinct: BTreeSet<&str> = compounds.iter().flat_map(|c| c.constituents()).collect();
    Err(Error::SplitFailed(format!(
        "{} compounds over {} constituents; {}",
        compounds.len(),
        distinct.len(),
        diagnostics.iter().take(3).cloned().collect::<Vec<_>>().join("; ")
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nc(a: &str, b: &str) -> NounCompound {
        NounCompound::new(a, b).unwrap()
    }

    #[test]
    fn disjoint_constituents_never_discard() {
        let items: Vec<NounCompound> = (0..30).map(|i| nc(&format!("a{i}"), &format!("b{i}"))).collect();
        let s = lexical_split(&items, |c| c, SplitRatios::DEFAULT, 3, 5).unwrap();
        assert_eq!(s.discarded, 0);
        assert_eq!(s.train.len() + s.validation.len() + s.test.len(), 30);
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (24, 3, 3));
    }

    #[test]
    fn shared_head_fails() {
        let items: Vec<NounCompound> = (0..20).map(|i| nc(&format!("m{i}"), "guide")).collect();
        let err = lexical_split(&items, |c| c, SplitRatios::DEFAULT, 0, 10).unwrap_err();
        assert!(matches!(err, Error::SplitFailed(_)), "{err}");
        assert!(err.to_string().contains("empty folds"));
    }
}
