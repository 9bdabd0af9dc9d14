//! Batch losses and analytic gradients for every model kind and objective,
//! plus the central finite-difference check of those gradients.

use super::loss::{compositional_loss, compositional_loss_grad, margin_loss};
use super::{CompositionalExample, ParaphraseTriple, TrainConfig};
use crate::compose::{lstm_backward, lstm_forward, CompositionModel, LstmParams, Params};
use crate::error::{Error, Result};
use crate::linalg::{add_scaled, cosine, cosine_grad};

/// A mini-batch for either objective.
#[derive(Debug, Clone)]
pub enum Batch {
    Compositional(Vec<CompositionalExample>),
    Paraphrase(Vec<ParaphraseTriple>),
}

impl Batch {
    pub fn len(&self) -> usize {
        match self {
            Batch::Compositional(b) => b.len(),
            Batch::Paraphrase(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Mean loss over the batch.
pub fn batch_loss(model: &CompositionModel, batch: &Batch, config: &TrainConfig) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut total = 0.0;
    match batch {
        Batch::Compositional(items) => {
            for ex in items {
                let out = model.compose(&ex.v1, &ex.v2)?;
                total += compositional_loss(&out, &ex.observed, config.distance)?;
            }
        }
        Batch::Paraphrase(items) => {
            for t in items {
                let a = model.encode(&refs(&t.compound))?;
                let p = model.encode(&refs(&t.positive))?;
                let n = model.encode(&refs(&t.negative))?;
                total += margin_loss(&a, &p, &n, config.margin)?;
            }
        }
    }
    Ok(total / batch.len() as f64)
}

fn refs(seq: &[Vec<f64>]) -> Vec<&[f64]> {
    seq.iter().map(Vec::as_slice).collect()
}

fn lstm_params(model: &CompositionModel) -> Result<&LstmParams> {
    match model.params() {
        Params::Lstm(p) => Ok(p),
        _ => Err(Error::InvalidArgument(format!(
            "the paraphrase objective needs an LSTM encoder, got {}",
            model.kind()
        ))),
    }
}

/// Adds `∂ loss / ∂ params` for one composition `f(v1, v2)`, given
/// `d_out = ∂ loss / ∂ f(v1, v2)`.
fn accumulate_compose_grad(model: &CompositionModel, v1: &[f64], v2: &[f64], d_out: &[f64], grad: &mut [f64]) {
    let d = model.dim();
    match model.params() {
        Params::Add(_) => {
            grad[0] += d_out.iter().zip(v1).map(|(g, x)| g * x).sum::<f64>();
            grad[1] += d_out.iter().zip(v2).map(|(g, x)| g * x).sum::<f64>();
        }
        Params::FullAdd(_) => {
            let (w1, w2) = grad.split_at_mut(d * d);
            for r in 0..d {
                add_scaled(&mut w1[r * d..(r + 1) * d], d_out[r], v1);
                add_scaled(&mut w2[r * d..(r + 1) * d], d_out[r], v2);
            }
        }
        Params::Matrix(p) => {
            let pre = crate::compose::matrix_preactivation(p, v1, v2);
            let d_pre: Vec<f64> = pre
                .iter()
                .zip(d_out)
                .map(|(z, g)| {
                    let t = z.tanh();
                    g * (1.0 - t * t)
                })
                .collect();
            for (i, x) in v1.iter().chain(v2).enumerate() {
                add_scaled(&mut grad[i * d..(i + 1) * d], *x, &d_pre);
            }
        }
        Params::Lstm(p) => {
            let trace = lstm_forward(p, &[v1, v2]);
            lstm_backward(p, &trace, d_out, grad);
        }
    }
}

/// Mean loss and its gradient with respect to the flat parameter vector.
pub fn batch_loss_and_grad(model: &CompositionModel, batch: &Batch, config: &TrainConfig) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut grad = vec![0.0; model.param_count()];
    let mut total = 0.0;
    match batch {
        Batch::Compositional(items) => {
            for ex in items {
                let out = model.compose(&ex.v1, &ex.v2)?;
                total += compositional_loss(&out, &ex.observed, config.distance)?;
                let d_out = compositional_loss_grad(&out, &ex.observed, config.distance)?;
                accumulate_compose_grad(model, &ex.v1, &ex.v2, &d_out, &mut grad);
            }
        }
        Batch::Paraphrase(items) => {
            let p = lstm_params(model)?;
            for t in items {
                let ta = lstm_forward(p, &refs(&t.compound));
                let tp = lstm_forward(p, &refs(&t.positive));
                let tn = lstm_forward(p, &refs(&t.negative));
                let (a, pos, neg) = (ta.final_hidden(), tp.final_hidden(), tn.final_hidden());
                let loss = margin_loss(a, pos, neg, config.margin)?;
                total += loss;
                if loss <= 0.0 {
                    continue;
                }
                // ∂/∂a = −∂cos(a,p)/∂a + ∂cos(a,n)/∂a
                let mut da: Vec<f64> = cosine_grad(a, pos).into_iter().map(|g| -g).collect();
                add_scaled(&mut da, 1.0, &cosine_grad(a, neg));
                let dp: Vec<f64> = cosine_grad(pos, a).into_iter().map(|g| -g).collect();
                let dn = cosine_grad(neg, a);
                lstm_backward(p, &ta, &da, &mut grad);
                lstm_backward(p, &tp, &dp, &mut grad);
                lstm_backward(p, &tn, &dn, &mut grad);
                debug_assert!(cosine(a, pos).is_some());
            }
        }
    }
    let n = batch.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((total / n, grad))
}

/// Largest relative error `|a − n| / max(|a|, |n|, 1e-8)` between analytic
/// gradients and central differences with the given step.
pub fn gradient_check(model: &CompositionModel, batch: &Batch, config: &TrainConfig, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let (_, analytic) = batch_loss_and_grad(model, batch, config)?;
    let base = model.flat_params();
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (i, a) in analytic.iter().enumerate() {
        let mut p = base.clone();
        p[i] = base[i] + step;
        probe.set_flat_params(&p)?;
        let up = batch_loss(&probe, batch, config)?;
        p[i] = base[i] - step;
        probe.set_flat_params(&p)?;
        let down = batch_loss(&probe, batch, config)?;
        let numeric = (up - down) / (2.0 * step);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::{init_model, ModelKind};
    use crate::train::Distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn compositional_batch(seed: u64, d: usize, n: usize) -> Batch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Batch::Compositional(
            (0..n)
                .map(|_| CompositionalExample {
                    v1: random_vec(&mut rng, d),
                    v2: random_vec(&mut rng, d),
                    observed: random_vec(&mut rng, d),
                })
                .collect(),
        )
    }

    #[test]
    fn add_mse_gradient_is_tight() {
        let cfg = TrainConfig::compositional();
        let model = init_model(ModelKind::Add, 4, 3).unwrap();
        let err = gradient_check(&model, &compositional_batch(1, 4, 5), &cfg, 1e-5).unwrap();
        assert!(err < 1e-6, "relative error {err}");
    }

    #[test]
    fn all_kinds_both_distances() {
        for distance in [Distance::Mse, Distance::Cosine] {
            let cfg = TrainConfig {
                distance,
                ..TrainConfig::compositional()
            };
            for kind in ModelKind::ALL {
                let model = init_model(kind, 3, 5).unwrap();
                let err = gradient_check(&model, &compositional_batch(2, 3, 4), &cfg, 1e-5).unwrap();
                assert!(err < 1e-4, "{kind} {distance:?}: {err}");
            }
        }
    }

    #[test]
    fn zero_gradient_at_minimum() {
        let model = init_model(ModelKind::FullAdd, 3, 1).unwrap();
        let v1 = vec![0.1, -0.4, 0.3];
        let v2 = vec![0.5, 0.2, -0.6];
        let observed = model.compose(&v1, &v2).unwrap();
        let batch = Batch::Compositional(vec![CompositionalExample { v1, v2, observed }]);
        let (loss, grad) = batch_loss_and_grad(&model, &batch, &TrainConfig::compositional()).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn margin_gradient_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = 3;
        let mut seq = |len: usize| (0..len).map(|_| random_vec(&mut rng, d)).collect::<Vec<_>>();
        let triples = vec![
            ParaphraseTriple {
                compound: seq(2),
                positive: seq(3),
                negative: seq(4),
            },
            ParaphraseTriple {
                compound: seq(2),
                positive: seq(5),
                negative: seq(3),
            },
        ];
        let model = init_model(ModelKind::Lstm, d, 8).unwrap();
        let cfg = TrainConfig::paraphrase();
        let err = gradient_check(&model, &Batch::Paraphrase(triples), &cfg, 1e-5).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn paraphrase_batch_requires_lstm() {
        let t = ParaphraseTriple {
            compound: vec![vec![1.0], vec![1.0]],
            positive: vec![vec![1.0]; 3],
            negative: vec![vec![1.0]; 3],
        };
        let model = init_model(ModelKind::Add, 1, 0).unwrap();
        assert!(batch_loss_and_grad(&model, &Batch::Paraphrase(vec![t]), &TrainConfig::paraphrase()).is_err());
    }
}
