use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{score, Averaging};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LogisticRegression,
    LinearSvm,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::LogisticRegression => "logistic_regression",
            Family::LinearSvm => "linear_svm",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic_regression" => Ok(Family::LogisticRegression),
            "linear_svm" => Ok(Family::LinearSvm),
            other => Err(Error::InvalidArgument(format!("unknown classifier family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub family: Family,
    pub l2: f64,
}

pub const DEFAULT_L2: [f64; 5] = [1e-4, 1e-3, 1e-2, 0.1, 1.0];

pub fn default_grid() -> Vec<GridPoint> {
    [Family::LogisticRegression, Family::LinearSvm]
        .into_iter()
        .flat_map(|family| DEFAULT_L2.into_iter().map(move |l2| GridPoint { family, l2 }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iter: 500,
            tolerance: 1e-6,
        }
    }
}

/// One-vs-rest linear model over raw input features. Binary problems keep a
/// single row scoring `classes[1]` against `classes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearClassifier {
    pub family: Family,
    pub l2: f64,
    classes: Vec<String>,
    weights: Matrix,
    bias: Vec<f64>,
}

impl LinearClassifier {
    pub fn new(family: Family, l2: f64, classes: Vec<String>, weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        let expected_rows = if classes.len() == 2 { 1 } else { classes.len() };
        if classes.len() < 2 || weights.rows() != expected_rows || bias.len() != expected_rows {
            return Err(Error::InvalidArgument("classifier shape does not match its classes".into()));
        }
        if !weights.is_finite() || bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::Training("non-finite classifier parameters".into()));
        }
        Ok(LinearClassifier {
            family,
            l2,
            classes,
            weights,
            bias,
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn decision(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok((0..self.weights.rows()).map(|r| dot(self.weights.row(r), x) + self.bias[r]).collect())
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<&str> {
        let s = self.decision(x)?;
        let idx = if s.len() == 1 {
            usize::from(s[0] > 0.0)
        } else {
            // earliest class wins ties
            let mut best = 0;
            for (i, v) in s.iter().enumerate() {
                if *v > s[best] {
                    best = i;
                }
            }
            best
        };
        Ok(&self.classes[idx])
    }
}

pub fn predict(clf: &LinearClassifier, vectors: &[Vec<f64>]) -> Result<Vec<String>> {
    vectors.iter().map(|x| clf.predict_one(x).map(str::to_string)).collect()
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    crate::linalg::sigmoid(z)
}

/// Mean cross-entropy of labels `y` in {0, 1} plus `l2/2 * |w|^2` (bias
/// unregularized).
pub fn logistic_objective(x: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, l2: f64) -> f64 {
    let n = x.len() as f64;
    let ce: f64 = x.iter().zip(y).map(|(xi, yi)| {
        let z = dot(w, xi) + b;
        softplus(z) - yi * z
    }).sum();
    ce / n + 0.5 * l2 * dot(w, w)
}

pub fn logistic_gradient(x: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, l2: f64) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut gw: Vec<f64> = w.iter().map(|wi| l2 * wi).collect();
    let mut gb = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let r = (sigmoid(dot(w, xi) + b) - yi) / n;
        crate::linalg::add_scaled(&mut gw, r, xi);
        gb += r;
    }
    (gw, gb)
}

/// Gradient descent on the logistic objective is monotone for any learning
/// rate below this bound (`2 / L` with `L = mean|[x;1]|^2 / 4 + l2`).
pub fn logistic_stability_bound(x: &[Vec<f64>], l2: f64) -> f64 {
    let mean_sq = x.iter().map(|xi| dot(xi, xi) + 1.0).sum::<f64>() / x.len().max(1) as f64;
    2.0 / (0.25 * mean_sq + l2)
}

/// Full-batch gradient descent; returns weights, bias and the objective
/// before each step plus the final one.
pub fn fit_logistic(
    x: &[Vec<f64>],
    y: &[f64],
    l2: f64,
    learning_rate: Option<f64>,
    solver: &SolverConfig,
) -> (Vec<f64>, f64, Vec<f64>) {
    let d = x.first().map_or(0, Vec::len);
    let eta = learning_rate.unwrap_or_else(|| 0.5 * logistic_stability_bound(x, l2));
    let (mut w, mut b) = (vec![0.0; d], 0.0);
    let mut trace = vec![logistic_objective(x, y, &w, b, l2)];
    for _ in 0..solver.max_iter {
        let (gw, gb) = logistic_gradient(x, y, &w, b, l2);
        if (dot(&gw, &gw) + gb * gb).sqrt() < solver.tolerance {
            break;
        }
        crate::linalg::add_scaled(&mut w, -eta, &gw);
        b -= eta * gb;
        trace.push(logistic_objective(x, y, &w, b, l2));
    }
    (w, b, trace)
}

fn svm_objective(x: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, l2: f64) -> f64 {
    let hinge: f64 = x.iter().zip(y).map(|(xi, yi)| (1.0 - yi * (dot(w, xi) + b)).max(0.0)).sum();
    hinge / x.len() as f64 + 0.5 * l2 * dot(w, w)
}

/// Subgradient descent on mean hinge loss plus `l2/2 * |w|^2` for labels in
/// {-1, +1}, step `eta0 / sqrt(t)`, keeping the best iterate.
fn fit_svm(x: &[Vec<f64>], y: &[f64], l2: f64, solver: &SolverConfig) -> (Vec<f64>, f64) {
    let d = x.first().map_or(0, Vec::len);
    let n = x.len() as f64;
    let mean_sq = x.iter().map(|xi| dot(xi, xi) + 1.0).sum::<f64>() / n;
    let eta0 = 1.0 / mean_sq.sqrt();
    let (mut w, mut b) = (vec![0.0; d], 0.0);
    let mut best = (svm_objective(x, y, &w, b, l2), w.clone(), b);
    for t in 1..=solver.max_iter {
        let mut gw: Vec<f64> = w.iter().map(|wi| l2 * wi).collect();
        let mut gb = 0.0;
        for (xi, yi) in x.iter().zip(y) {
            if yi * (dot(&w, xi) + b) < 1.0 {
                crate::linalg::add_scaled(&mut gw, -yi / n, xi);
                gb -= yi / n;
            }
        }
        if (dot(&gw, &gw) + gb * gb).sqrt() < solver.tolerance {
            break;
        }
        let eta = eta0 / (t as f64).sqrt();
        crate::linalg::add_scaled(&mut w, -eta, &gw);
        b -= eta * gb;
        let obj = svm_objective(x, y, &w, b, l2);
        if obj < best.0 {
            best = (obj, w.clone(), b);
        }
    }
    (best.1, best.2)
}

/// Per-feature z-scoring fitted on the training rows.
struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(x: &[Vec<f64>]) -> Self {
        let d = x[0].len();
        let n = x.len() as f64;
        let mut mean = vec![0.0; d];
        for xi in x {
            crate::linalg::add_scaled(&mut mean, 1.0 / n, xi);
        }
        let scale = (0..d)
            .map(|j| {
                let var = x.iter().map(|xi| (xi[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    /// Maps a model over standardized features back to raw features.
    fn fold(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let raw: Vec<f64> = w.iter().zip(&self.scale).map(|(wi, s)| wi / s).collect();
        (raw.clone(), b - dot(&raw, &self.mean))
    }
}

fn sorted_classes<S: AsRef<str>>(labels: &[S]) -> Vec<String> {
    labels.iter().map(|l| l.as_ref().to_string()).collect::<BTreeSet<_>>().into_iter().collect()
}

/// Fits one grid point; `classes` must be the sorted label inventory.
pub fn fit_classifier<S: AsRef<str>>(
    x: &[Vec<f64>],
    labels: &[S],
    point: GridPoint,
    solver: &SolverConfig,
) -> Result<LinearClassifier> {
    if x.is_empty() || x.len() != labels.len() {
        return Err(Error::Training("training set empty or labels misaligned".into()));
    }
    let d = x[0].len();
    if let Some(bad) = x.iter().find(|xi| xi.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    if !(point.l2 >= 0.0 && point.l2.is_finite()) {
        return Err(Error::InvalidArgument(format!("l2 must be non-negative, got {}", point.l2)));
    }
    let classes = sorted_classes(labels);
    if classes.len() < 2 {
        return Err(Error::Training(format!(
            "need at least 2 classes in training data, found {}",
            classes.len()
        )));
    }
    let std = Standardizer::fit(x);
    let xs: Vec<Vec<f64>> = x.iter().map(|xi| std.apply(xi)).collect();
    let targets: Vec<&String> = if classes.len() == 2 { vec![&classes[1]] } else { classes.iter().collect() };
    let mut weights = Matrix::zeros(targets.len(), d);
    let mut bias = Vec::with_capacity(targets.len());
    for (r, target) in targets.iter().enumerate() {
        let (w, b) = match point.family {
            Family::LogisticRegression => {
                let y: Vec<f64> = labels.iter().map(|l| f64::from(u8::from(l.as_ref() == target.as_str()))).collect();
                let (w, b, _) = fit_logistic(&xs, &y, point.l2, None, solver);
                (w, b)
            }
            Family::LinearSvm => {
                let y: Vec<f64> = labels.iter().map(|l| if l.as_ref() == target.as_str() { 1.0 } else { -1.0 }).collect();
                fit_svm(&xs, &y, point.l2, solver)
            }
        };
        let (w, b) = std.fold(&w, b);
        for (c, v) in w.into_iter().enumerate() {
            weights.set(r, c, v);
        }
        bias.push(b);
    }
    LinearClassifier::new(point.family, point.l2, classes, weights, bias)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub family: Family,
    pub l2: f64,
    pub validation_f1: f64,
    /// Validation F1 of every grid point, in grid order.
    pub scores: Vec<(GridPoint, f64)>,
}

/// Trains every grid point and keeps the one with the best validation
/// aggregate F1 (ties: smaller l2, then family order). With an empty
/// validation set the training set is scored instead.
pub fn train_classifier<S: AsRef<str> + Sync>(
    train: (&[Vec<f64>], &[S]),
    validation: (&[Vec<f64>], &[S]),
    grid: &[GridPoint],
    averaging: &Averaging,
    solver: &SolverConfig,
) -> Result<(LinearClassifier, Selection)> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty classifier grid".into()));
    }
    let (vx, vy) = if validation.0.is_empty() { train } else { validation };
    let results: Vec<(LinearClassifier, f64)> = grid
        .par_iter()
        .map(|&point| {
            let clf = fit_classifier(train.0, train.1, point, solver)?;
            let pred = predict(&clf, vx)?;
            let gold: Vec<&str> = vy.iter().map(AsRef::as_ref).collect();
            let pred: Vec<&str> = pred.iter().map(String::as_str).collect();
            let f1 = score(&gold, &pred, averaging)?.f1;
            Ok((clf, f1))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for i in 1..results.len() {
        let (a, b) = (&results[i], &results[best]);
        let better = a.1 > b.1
            || (a.1 == b.1 && (a.0.l2 < b.0.l2 || (a.0.l2 == b.0.l2 && a.0.family < b.0.family)));
        if better {
            best = i;
        }
    }
    let scores = grid.iter().copied().zip(results.iter().map(|r| r.1)).collect();
    let (clf, f1) = results.into_iter().nth(best).expect("non-empty grid");
    let selection = Selection {
        family: clf.family,
        l2: clf.l2,
        validation_f1: f1,
        scores,
    };
    Ok((clf, selection))
}
