use crate::linalg::{add_scaled, sigmoid, Matrix};

/// One gate's weights: `z = input · x + recurrent · h + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub input: Matrix,
    pub recurrent: Matrix,
    pub bias: Vec<f64>,
}

impl Gate {
    fn zeros(d: usize) -> Self {
        Gate {
            input: Matrix::zeros(d, d),
            recurrent: Matrix::zeros(d, d),
            bias: vec![0.0; d],
        }
    }

    fn preactivation(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut z = self.input.matvec(x);
        for ((zi, r), b) in z.iter_mut().zip(self.recurrent.matvec(h)).zip(&self.bias) {
            *zi += r + b;
        }
        z
    }
}

/// Single-layer LSTM, hidden size equal to the input size.
/// Flattened order: input, forget, output, candidate; each as `input`,
/// `recurrent`, `bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input_gate: Gate,
    pub forget_gate: Gate,
    pub output_gate: Gate,
    pub candidate: Gate,
}

impl LstmParams {
    pub fn zeros(d: usize) -> Self {
        LstmParams {
            input_gate: Gate::zeros(d),
            forget_gate: Gate::zeros(d),
            output_gate: Gate::zeros(d),
            candidate: Gate::zeros(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.input_gate.bias.len()
    }

    pub(crate) fn shapes_ok(&self) -> bool {
        let d = self.dim();
        self.gates()
            .iter()
            .all(|g| g.input.shape() == (d, d) && g.recurrent.shape() == (d, d) && g.bias.len() == d)
    }

    fn gates(&self) -> [&Gate; 4] {
        [&self.input_gate, &self.forget_gate, &self.output_gate, &self.candidate]
    }

    fn gates_mut(&mut self) -> [&mut Gate; 4] {
        [
            &mut self.input_gate,
            &mut self.forget_gate,
            &mut self.output_gate,
            &mut self.candidate,
        ]
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * (2 * self.dim().pow(2) + self.dim()));
        for g in self.gates() {
            out.extend_from_slice(g.input.as_slice());
            out.extend_from_slice(g.recurrent.as_slice());
            out.extend_from_slice(&g.bias);
        }
        out
    }

    pub(crate) fn unflatten(&mut self, flat: &[f64]) {
        let d = self.dim();
        let mut rest = flat;
        for g in self.gates_mut() {
            let (a, r) = rest.split_at(d * d);
            g.input.as_mut_slice().copy_from_slice(a);
            let (b, r) = r.split_at(d * d);
            g.recurrent.as_mut_slice().copy_from_slice(b);
            let (c, r) = r.split_at(d);
            g.bias.copy_from_slice(c);
            rest = r;
        }
    }
}

/// Per-step activations kept for backpropagation through time.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    inputs: Vec<Vec<f64>>,
    input_gate: Vec<Vec<f64>>,
    forget_gate: Vec<Vec<f64>>,
    output_gate: Vec<Vec<f64>>,
    candidate: Vec<Vec<f64>>,
    /// `cells[t]` is the cell state after step `t`; index 0 is the zero state.
    cells: Vec<Vec<f64>>,
    hidden: Vec<Vec<f64>>,
}

impl LstmTrace {
    pub fn final_hidden(&self) -> &[f64] {
        self.hidden.last().expect("trace always holds the initial state")
    }
}

pub fn lstm_forward(p: &LstmParams, inputs: &[&[f64]]) -> LstmTrace {
    let d = p.dim();
    let mut trace = LstmTrace {
        inputs: Vec::with_capacity(inputs.len()),
        input_gate: Vec::new(),
        forget_gate: Vec::new(),
        output_gate: Vec::new(),
        candidate: Vec::new(),
        cells: vec![vec![0.0; d]],
        hidden: vec![vec![0.0; d]],
    };
    for x in inputs {
        let h = trace.hidden.last().unwrap();
        let c_prev = trace.cells.last().unwrap();
        let i: Vec<f64> = p.input_gate.preactivation(x, h).into_iter().map(sigmoid).collect();
        let f: Vec<f64> = p.forget_gate.preactivation(x, h).into_iter().map(sigmoid).collect();
        let o: Vec<f64> = p.output_gate.preactivation(x, h).into_iter().map(sigmoid).collect();
        let g: Vec<f64> = p.candidate.preactivation(x, h).into_iter().map(f64::tanh).collect();
        let c: Vec<f64> = (0..d).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
        let h_next: Vec<f64> = (0..d).map(|k| o[k] * c[k].tanh()).collect();
        trace.inputs.push(x.to_vec());
        trace.input_gate.push(i);
        trace.forget_gate.push(f);
        trace.output_gate.push(o);
        trace.candidate.push(g);
        trace.cells.push(c);
        trace.hidden.push(h_next);
    }
    trace
}

/// Backpropagates `d_hidden` (gradient w.r.t. the final hidden state) through
/// the trace, adding parameter gradients into `grad` (canonical flat order).
pub fn lstm_backward(p: &LstmParams, trace: &LstmTrace, d_hidden: &[f64], grad: &mut [f64]) {
    let d = p.dim();
    let gate_len = 2 * d * d + d;
    let mut dh = d_hidden.to_vec();
    let mut dc = vec![0.0; d];
    for t in (0..trace.inputs.len()).rev() {
        let (i, f, o, g) = (
            &trace.input_gate[t],
            &trace.forget_gate[t],
            &trace.output_gate[t],
            &trace.candidate[t],
        );
        let c = &trace.cells[t + 1];
        let c_prev = &trace.cells[t];
        let h_prev = &trace.hidden[t];
        let x = &trace.inputs[t];

        let mut dz = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];
        for k in 0..d {
            let tc = c[k].tanh();
            dc[k] += dh[k] * o[k] * (1.0 - tc * tc);
            dz[0][k] = dc[k] * g[k] * i[k] * (1.0 - i[k]);
            dz[1][k] = dc[k] * c_prev[k] * f[k] * (1.0 - f[k]);
            dz[2][k] = dh[k] * tc * o[k] * (1.0 - o[k]);
            dz[3][k] = dc[k] * i[k] * (1.0 - g[k] * g[k]);
            dc[k] *= f[k];
        }

        let mut dh_prev = vec![0.0; d];
        for (gi, (gate, dzg)) in p.gates().into_iter().zip(&dz).enumerate() {
            let base = gi * gate_len;
            let (w_in, rest) = grad[base..base + gate_len].split_at_mut(d * d);
            let (w_rec, bias) = rest.split_at_mut(d * d);
            for r in 0..d {
                add_scaled(&mut w_in[r * d..(r + 1) * d], dzg[r], x);
                add_scaled(&mut w_rec[r * d..(r + 1) * d], dzg[r], h_prev);
                bias[r] += dzg[r];
            }
            add_scaled(&mut dh_prev, 1.0, &gate.recurrent.vecmat(dzg));
        }
        dh = dh_prev;
    }
}
