use super::Distance;
use crate::error::{Error, Result};
use crate::linalg::{check_len, cosine, cosine_grad};

fn cos_or_degenerate(a: &[f64], b: &[f64]) -> Result<f64> {
    cosine(a, b).ok_or_else(|| Error::Degenerate("zero-norm vector under cosine".into()))
}

/// Distance between a composed vector and the observed distributional vector:
/// mean squared error, or `1 − cos`.
pub fn compositional_loss(composed: &[f64], observed: &[f64], distance: Distance) -> Result<f64> {
    check_len(observed, composed.len())?;
    match distance {
        Distance::Mse => {
            let sum: f64 = composed.iter().zip(observed).map(|(c, o)| (c - o).powi(2)).sum();
            Ok(sum / composed.len() as f64)
        }
        Distance::Cosine => Ok(1.0 - cos_or_degenerate(composed, observed)?),
    }
}

/// Gradient of [`compositional_loss`] with respect to `composed`.
pub fn compositional_loss_grad(composed: &[f64], observed: &[f64], distance: Distance) -> Result<Vec<f64>> {
    check_len(observed, composed.len())?;
    match distance {
        Distance::Mse => {
            let scale = 2.0 / composed.len() as f64;
            Ok(composed.iter().zip(observed).map(|(c, o)| scale * (c - o)).collect())
        }
        Distance::Cosine => {
            cos_or_degenerate(composed, observed)?;
            Ok(cosine_grad(composed, observed).into_iter().map(|g| -g).collect())
        }
    }
}

/// `max(0, λ − cos(nc, p) + cos(nc, neg))`.
pub fn margin_loss(v_nc: &[f64], v_p: &[f64], v_neg: &[f64], margin: f64) -> Result<f64> {
    check_len(v_p, v_nc.len())?;
    check_len(v_neg, v_nc.len())?;
    let pos = cos_or_degenerate(v_nc, v_p)?;
    let neg = cos_or_degenerate(v_nc, v_neg)?;
    Ok((margin - pos + neg).max(0.0))
}
