//! Gradient-descent training of composition functions (compositional
//! objective) and of LSTM phrase encoders (paraphrase margin objective).

mod compositional;
mod grad;
mod loss;
mod paraphrase;
mod split;

use serde::{Deserialize, Serialize};

use crate::compose::CompositionModel;
use crate::error::{Error, Result};

pub use compositional::{compositional_examples, train_compositional, CompositionalExample};
pub use grad::{batch_loss, batch_loss_and_grad, gradient_check, Batch};
pub use loss::{compositional_loss, compositional_loss_grad, margin_loss};
pub use paraphrase::{
    paraphrase_separation, train_paraphrase, ParaphrasePair, ParaphraseTriple, Separation,
};
pub use split::{split_compounds, SplitRatios};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Compositional,
    Paraphrase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    Mse,
    Cosine,
}

/// Training hyperparameters. Serialized as a flat key-value document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub objective: Objective,
    /// Compositional objective only.
    pub distance: Distance,
    /// Hinge margin λ of the paraphrase objective.
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub normalize_inputs: bool,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub early_stop_patience: usize,
    pub negatives_per_positive: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::compositional()
    }
}

impl TrainConfig {
    pub fn compositional() -> Self {
        TrainConfig {
            objective: Objective::Compositional,
            distance: Distance::Mse,
            margin: 0.6,
            learning_rate: 0.5,
            epochs: 50,
            batch_size: 32,
            seed: 0,
            normalize_inputs: false,
            early_stop_patience: 0,
            negatives_per_positive: 1,
        }
    }

    pub fn paraphrase() -> Self {
        TrainConfig {
            objective: Objective::Paraphrase,
            normalize_inputs: true,
            learning_rate: 0.5,
            epochs: 30,
            batch_size: 16,
            ..TrainConfig::compositional()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0 && self.margin <= 2.0) {
            return Err(Error::Config(format!("margin must lie in (0, 2], got {}", self.margin)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.negatives_per_positive == 0 {
            return Err(Error::Config("negatives_per_positive must be positive".into()));
        }
        Ok(())
    }
}

/// Per-epoch losses and the epoch whose parameters were kept.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    /// Zero-based index of the minimum validation loss (earliest on ties).
    pub selected_epoch: Option<usize>,
}

impl TrainHistory {
    /// One `epoch\ttrain_loss\tval_loss` line per epoch, epochs numbered from 1.
    pub fn to_log(&self) -> String {
        self.train_loss
            .iter()
            .zip(&self.validation_loss)
            .enumerate()
            .map(|(i, (t, v))| format!("{}\t{t:.10}\t{v:.10}\n", i + 1))
            .collect()
    }
}

/// A trained model, its history, and how many inputs were dropped as OOV.
#[derive(Debug, Clone)]
pub struct Trained {
    pub model: CompositionModel,
    pub history: TrainHistory,
    pub excluded: usize,
}

/// Shared epoch loop: SGD over shuffled mini-batches with best-validation
/// selection and optional early stopping.
pub(crate) struct EpochRunner<'a> {
    pub config: &'a TrainConfig,
}

impl EpochRunner<'_> {
    pub fn run<F, V>(
        &self,
        mut model: CompositionModel,
        mut epoch_batches: F,
        mut validation_loss: V,
    ) -> Result<(CompositionModel, TrainHistory)>
    where
        F: FnMut(usize) -> Result<Vec<Batch>>,
        V: FnMut(&CompositionModel) -> Result<f64>,
    {
        let cfg = self.config;
        let mut history = TrainHistory::default();
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut params = model.flat_params();
        for epoch in 0..cfg.epochs {
            let mut total = 0.0;
            let mut count = 0usize;
            for batch in epoch_batches(epoch)? {
                let n = batch.len();
                let (loss, grad) = batch_loss_and_grad(&model, &batch, cfg)?;
                for (p, g) in params.iter_mut().zip(&grad) {
                    *p -= cfg.learning_rate * g;
                }
                if params.iter().any(|p| !p.is_finite()) {
                    return Err(Error::Training(format!("parameters diverged in epoch {}", epoch + 1)));
                }
                model.set_flat_params(&params)?;
                total += loss * n as f64;
                count += n;
            }
            let val = validation_loss(&model)?;
            history.train_loss.push(total / count.max(1) as f64);
            history.validation_loss.push(val);
            log::debug!("epoch {}: train {:.6} val {:.6}", epoch + 1, total / count.max(1) as f64, val);
            if best.as_ref().map_or(true, |(b, _)| val < *b) {
                best = Some((val, params.clone()));
                history.selected_epoch = Some(epoch);
            }
            let since_best = epoch - history.selected_epoch.unwrap_or(0);
            if cfg.early_stop_patience > 0 && since_best >= cfg.early_stop_patience {
                break;
            }
        }
        if let Some((_, p)) = best {
            model.set_flat_params(&p)?;
        }
        Ok((model, history))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = |f: fn(&mut TrainConfig)| {
            let mut c = TrainConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.margin = 0.0));
        assert!(bad(|c| c.margin = 2.5));
        assert!(bad(|c| c.learning_rate = 0.0));
        assert!(bad(|c| c.batch_size = 0));
        assert!(bad(|c| c.negatives_per_positive = 0));
    }

    #[test]
    fn config_parses_flat_document_and_rejects_unknown_keys() {
        let c: TrainConfig = toml::from_str("distance = \"cosine\"\nepochs = 3\n").unwrap();
        assert_eq!(c.distance, Distance::Cosine);
        assert_eq!(c.epochs, 3);
        assert_eq!(c.margin, 0.6);
        assert!(toml::from_str::<TrainConfig>("bogus = 1\n").is_err());
    }

    #[test]
    fn log_format() {
        let h = TrainHistory {
            train_loss: vec![1.0, 0.5],
            validation_loss: vec![2.0, 0.25],
            selected_epoch: Some(1),
        };
        assert_eq!(h.to_log(), "1\t1.0000000000\t2.0000000000\n2\t0.5000000000\t0.2500000000\n");
    }
}
