//! Composition functions mapping two constituent vectors to a compound vector.
//!
//! Shape conventions:
//! - `FullAdd`: `W1 · v1 + W2 · v2` with both matrices `d×d`, rows indexing outputs.
//! - `Matrix`: `W` is `2d×d`; output is `tanh([v1; v2]ᵀ W)ᵀ`, i.e.
//!   `out[j] = tanh(Σ_i x[i] · W[i][j])` over the concatenation `x`.
//! - `LSTM`: single layer, hidden size `d`, zero initial state, final hidden
//!   state as the phrase vector.

mod lstm;
mod serialize;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_len, Matrix};

pub use lstm::{lstm_backward, lstm_forward, Gate, LstmParams, LstmTrace};
pub use serialize::{deserialize_model, read_model_file, serialize_model, write_model_file, FORMAT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Add,
    FullAdd,
    Matrix,
    Lstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Add, ModelKind::FullAdd, ModelKind::Matrix, ModelKind::Lstm];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Add => "add",
            ModelKind::FullAdd => "fulladd",
            ModelKind::Matrix => "matrix",
            ModelKind::Lstm => "lstm",
        }
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        ModelKind::ALL.get(code as usize).copied()
    }

    /// Number of scalar parameters for dimension `d`.
    pub fn param_count(self, d: usize) -> usize {
        match self {
            ModelKind::Add => 2,
            ModelKind::FullAdd => 2 * d * d,
            ModelKind::Matrix => 2 * d * d,
            ModelKind::Lstm => 4 * (2 * d * d + d),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "add" => Ok(ModelKind::Add),
            "fulladd" => Ok(ModelKind::FullAdd),
            "matrix" => Ok(ModelKind::Matrix),
            "lstm" => Ok(ModelKind::Lstm),
            other => Err(Error::InvalidArgument(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AddParams {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullAddParams {
    pub w1: Matrix,
    pub w2: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixParams {
    /// `2d×d`, acting on the concatenation `[v1; v2]` from the left.
    pub w: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Add(AddParams),
    FullAdd(FullAddParams),
    Matrix(MatrixParams),
    Lstm(LstmParams),
}

pub fn compose_add(p: &AddParams, v1: &[f64], v2: &[f64]) -> Result<Vec<f64>> {
    check_len(v2, v1.len())?;
    Ok(v1.iter().zip(v2).map(|(a, b)| p.alpha * a + p.beta * b).collect())
}

pub fn compose_fulladd(p: &FullAddParams, v1: &[f64], v2: &[f64]) -> Result<Vec<f64>> {
    let d = v1.len();
    check_len(v2, d)?;
    for m in [&p.w1, &p.w2] {
        if m.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: m.rows() * m.cols(),
            });
        }
    }
    let mut out = p.w1.matvec(v1);
    for (o, x) in out.iter_mut().zip(p.w2.matvec(v2)) {
        *o += x;
    }
    Ok(out)
}

/// Pre-activation `[v1; v2]ᵀ W`.
pub(crate) fn matrix_preactivation(p: &MatrixParams, v1: &[f64], v2: &[f64]) -> Vec<f64> {
    let mut concat = Vec::with_capacity(v1.len() * 2);
    concat.extend_from_slice(v1);
    concat.extend_from_slice(v2);
    p.w.vecmat(&concat)
}

pub fn compose_matrix(p: &MatrixParams, v1: &[f64], v2: &[f64]) -> Result<Vec<f64>> {
    let d = v1.len();
    check_len(v2, d)?;
    if p.w.shape() != (2 * d, d) {
        return Err(Error::DimensionMismatch {
            expected: 2 * d * d,
            found: p.w.rows() * p.w.cols(),
        });
    }
    Ok(matrix_preactivation(p, v1, v2).into_iter().map(f64::tanh).collect())
}

pub fn compose_lstm(p: &LstmParams, inputs: &[&[f64]]) -> Result<Vec<f64>> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("LSTM input sequence is empty".into()));
    }
    for x in inputs {
        check_len(x, p.dim())?;
    }
    Ok(lstm_forward(p, inputs).final_hidden().to_vec())
}

/// A composition function together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionModel {
    dim: usize,
    params: Params,
}

impl CompositionModel {
    pub fn new(dim: usize, params: Params) -> Result<Self> {
        let model = CompositionModel { dim, params };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let shape_ok = match &self.params {
            Params::Add(_) => true,
            Params::FullAdd(p) => p.w1.shape() == (d, d) && p.w2.shape() == (d, d),
            Params::Matrix(p) => p.w.shape() == (2 * d, d),
            Params::Lstm(p) => p.dim() == d && p.shapes_ok(),
        };
        if !shape_ok {
            return Err(Error::ModelFormat(format!(
                "parameter shapes do not match a {} model of dimension {d}",
                self.kind()
            )));
        }
        if !self.flat_params().iter().all(|x| x.is_finite()) {
            return Err(Error::ModelFormat("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn kind(&self) -> ModelKind {
        match self.params {
            Params::Add(_) => ModelKind::Add,
            Params::FullAdd(_) => ModelKind::FullAdd,
            Params::Matrix(_) => ModelKind::Matrix,
            Params::Lstm(_) => ModelKind::Lstm,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.kind().param_count(self.dim)
    }

    /// `f(v1, v2)`.
    pub fn compose(&self, v1: &[f64], v2: &[f64]) -> Result<Vec<f64>> {
        check_len(v1, self.dim)?;
        check_len(v2, self.dim)?;
        match &self.params {
            Params::Add(p) => compose_add(p, v1, v2),
            Params::FullAdd(p) => compose_fulladd(p, v1, v2),
            Params::Matrix(p) => compose_matrix(p, v1, v2),
            Params::Lstm(p) => compose_lstm(p, &[v1, v2]),
        }
    }

    /// Encodes a variable-length token sequence; only LSTM models accept
    /// sequences whose length differs from 2.
    pub fn encode(&self, inputs: &[&[f64]]) -> Result<Vec<f64>> {
        match (&self.params, inputs) {
            (Params::Lstm(p), _) => compose_lstm(p, inputs),
            (_, [a, b]) => self.compose(a, b),
            _ => Err(Error::InvalidArgument(format!(
                "{} composes exactly two vectors, got {}",
                self.kind(),
                inputs.len()
            ))),
        }
    }

    /// Parameters in their canonical flattened order.
    pub fn flat_params(&self) -> Vec<f64> {
        match &self.params {
            Params::Add(p) => vec![p.alpha, p.beta],
            Params::FullAdd(p) => [p.w1.as_slice(), p.w2.as_slice()].concat(),
            Params::Matrix(p) => p.w.as_slice().to_vec(),
            Params::Lstm(p) => p.flatten(),
        }
    }

    /// Replaces all parameters from a flat vector in canonical order.
    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        check_len(flat, self.param_count())?;
        let d = self.dim;
        match &mut self.params {
            Params::Add(p) => {
                p.alpha = flat[0];
                p.beta = flat[1];
            }
            Params::FullAdd(p) => {
                p.w1.as_mut_slice().copy_from_slice(&flat[..d * d]);
                p.w2.as_mut_slice().copy_from_slice(&flat[d * d..]);
            }
            Params::Matrix(p) => p.w.as_mut_slice().copy_from_slice(flat),
            Params::Lstm(p) => p.unflatten(flat),
        }
        Ok(())
    }

    pub fn from_flat(kind: ModelKind, dim: usize, flat: &[f64]) -> Result<Self> {
        let mut model = zero_model(kind, dim)?;
        model.set_flat_params(flat)?;
        model.validate()?;
        Ok(model)
    }
}

/// A model of `kind` with every parameter zero.
pub fn zero_model(kind: ModelKind, dim: usize) -> Result<CompositionModel> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let params = match kind {
        ModelKind::Add => Params::Add(AddParams { alpha: 0.0, beta: 0.0 }),
        ModelKind::FullAdd => Params::FullAdd(FullAddParams {
            w1: Matrix::zeros(dim, dim),
            w2: Matrix::zeros(dim, dim),
        }),
        ModelKind::Matrix => Params::Matrix(MatrixParams {
            w: Matrix::zeros(2 * dim, dim),
        }),
        ModelKind::Lstm => Params::Lstm(LstmParams::zeros(dim)),
    };
    Ok(CompositionModel { dim, params })
}

/// Glorot-uniform bound `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
    Matrix::from_vec(rows, cols, data).expect("shape")
}

/// Seeded initialization: Add at `α = β = 0.5`; matrices Glorot-uniform;
/// LSTM biases zero except the forget gate at 1.
pub fn init_model(kind: ModelKind, dim: usize, seed: u64) -> Result<CompositionModel> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = match kind {
        ModelKind::Add => Params::Add(AddParams { alpha: 0.5, beta: 0.5 }),
        ModelKind::FullAdd => {
            let s = glorot_bound(dim, dim);
            Params::FullAdd(FullAddParams {
                w1: uniform_matrix(&mut rng, dim, dim, s),
                w2: uniform_matrix(&mut rng, dim, dim, s),
            })
        }
        ModelKind::Matrix => Params::Matrix(MatrixParams {
            w: uniform_matrix(&mut rng, 2 * dim, dim, glorot_bound(2 * dim, dim)),
        }),
        ModelKind::Lstm => {
            let s = glorot_bound(dim, dim);
            let mut gate = |bias: f64| Gate {
                input: uniform_matrix(&mut rng, dim, dim, s),
                recurrent: uniform_matrix(&mut rng, dim, dim, s),
                bias: vec![bias; dim],
            };
            Params::Lstm(LstmParams {
                input_gate: gate(0.0),
                forget_gate: gate(1.0),
                output_gate: gate(0.0),
                candidate: gate(0.0),
            })
        }
    };
    CompositionModel::new(dim, params)
}
