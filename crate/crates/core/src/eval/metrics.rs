use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prediction placeholder for items the representation cannot embed. Never
/// counted as a class; always a wrong prediction.
pub const UNAVAILABLE: &str = "<unavailable>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Scores of the named positive class only.
    BinaryPositive(String),
    /// Unweighted mean over the classes seen in gold or predictions.
    Macro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold instances of this class.
    pub support: usize,
    pub predicted: usize,
    pub true_positives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub per_class: Vec<ClassMetrics>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

fn f1_of(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn score<S: AsRef<str>>(gold: &[S], predicted: &[S], averaging: &Averaging) -> Result<Metrics> {
    if gold.len() != predicted.len() {
        return Err(Error::Evaluation(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            predicted.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::Evaluation("nothing to score".into()));
    }
    let classes: BTreeSet<&str> = gold
        .iter()
        .chain(predicted)
        .map(AsRef::as_ref)
        .filter(|l| *l != UNAVAILABLE)
        .collect();
    let per_class: Vec<ClassMetrics> = classes
        .iter()
        .map(|&c| {
            let (mut tp, mut support, mut pred) = (0, 0, 0);
            for (g, p) in gold.iter().zip(predicted) {
                let (g, p) = (g.as_ref() == c, p.as_ref() == c);
                support += g as usize;
                pred += p as usize;
                tp += (g && p) as usize;
            }
            let (precision, recall) = (ratio(tp, pred), ratio(tp, support));
            ClassMetrics {
                label: c.to_string(),
                precision,
                recall,
                f1: f1_of(precision, recall),
                support,
                predicted: pred,
                true_positives: tp,
            }
        })
        .collect();
    let (precision, recall, f1) = match averaging {
        Averaging::BinaryPositive(pos) => per_class
            .iter()
            .find(|m| &m.label == pos)
            .map_or((0.0, 0.0, 0.0), |m| (m.precision, m.recall, m.f1)),
        Averaging::Macro => {
            let n = per_class.len().max(1) as f64;
            let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / n;
            (mean(|m| m.precision), mean(|m| m.recall), mean(|m| m.f1))
        }
    };
    Ok(Metrics {
        per_class,
        precision,
        recall,
        f1,
        support: gold.len(),
    })
}
