use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::linalg::Matrix;

/// Weights of one gate: `W · h_{t-1} + V · x_t + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    /// `W`, hidden_size × hidden_size.
    pub recurrent: Matrix,
    /// `V`, hidden_size × input_size.
    pub input: Matrix,
    /// `b`, hidden_size.
    pub bias: Vec<f64>,
}

impl GateParams {
    fn zeros(d: usize, m: usize) -> Self {
        Self {
            recurrent: Matrix::zeros(d, d),
            input: Matrix::zeros(d, m),
            bias: vec![0.0; d],
        }
    }

    /// `W · h + V · x + b`
    pub(crate) fn preactivation(&self, h_prev: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = self.bias.clone();
        self.recurrent.mul_vec_add(h_prev, &mut out);
        self.input.mul_vec_add(x, &mut out);
        out
    }
}

/// The four gates of a single-layer LSTM cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParameters {
    pub hidden_size: usize,
    pub input_size: usize,
    pub input_gate: GateParams,
    pub output_gate: GateParams,
    pub forget_gate: GateParams,
    /// Candidate cell update (tanh branch).
    pub candidate: GateParams,
}

impl LstmParameters {
    pub fn zeros(d: usize, m: usize) -> Self {
        Self {
            hidden_size: d,
            input_size: m,
            input_gate: GateParams::zeros(d, m),
            output_gate: GateParams::zeros(d, m),
            forget_gate: GateParams::zeros(d, m),
            candidate: GateParams::zeros(d, m),
        }
    }

    /// Gates in the fixed order input, output, forget, candidate.
    pub fn gates(&self) -> [&GateParams; 4] {
        [
            &self.input_gate,
            &self.output_gate,
            &self.forget_gate,
            &self.candidate,
        ]
    }

    pub fn gates_mut(&mut self) -> [&mut GateParams; 4] {
        [
            &mut self.input_gate,
            &mut self.output_gate,
            &mut self.forget_gate,
            &mut self.candidate,
        ]
    }
}

/// Affine head mapping the last hidden state to one scalar forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// LSTM cell plus readout. Gradients share this layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub cell: LstmParameters,
    pub readout: Readout,
}

impl Network {
    pub fn zeros(d: usize, m: usize) -> Self {
        Self {
            cell: LstmParameters::zeros(d, m),
            readout: Readout {
                weights: vec![0.0; d],
                bias: 0.0,
            },
        }
    }

    /// Seeded initialization; see [`init_parameters`]. The readout weights are
    /// drawn from the same stream after the cell, with a zero bias.
    pub fn init(seed: u64, d: usize, m: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cell = init_with(&mut rng, d, m)?;
        let bound = 1.0 / (d as f64).sqrt();
        let weights = (0..d).map(|_| rng.random_range(-bound..=bound)).collect();
        Ok(Self {
            cell,
            readout: Readout { weights, bias: 0.0 },
        })
    }

    pub fn hidden_size(&self) -> usize {
        self.cell.hidden_size
    }

    pub fn input_size(&self) -> usize {
        self.cell.input_size
    }

    /// Every parameter block in a fixed order.
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(14);
        for g in self.cell.gates() {
            out.push(g.recurrent.as_slice());
            out.push(g.input.as_slice());
            out.push(g.bias.as_slice());
        }
        out.push(self.readout.weights.as_slice());
        out.push(std::slice::from_ref(&self.readout.bias));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(14);
        for g in self.cell.gates_mut() {
            out.push(g.recurrent.as_mut_slice());
            out.push(g.input.as_mut_slice());
            out.push(g.bias.as_mut_slice());
        }
        out.push(self.readout.weights.as_mut_slice());
        out.push(std::slice::from_mut(&mut self.readout.bias));
        out
    }

    pub fn param_count(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks().concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        crate::error::check_len("flat parameter vector", self.param_count(), flat.len())?;
        let mut offset = 0;
        for block in self.blocks_mut() {
            block.copy_from_slice(&flat[offset..offset + block.len()]);
            offset += block.len();
        }
        Ok(())
    }

    pub fn fill_zero(&mut self) {
        for block in self.blocks_mut() {
            block.fill(0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for block in self.blocks_mut() {
            block.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Draws cell weights uniformly from `[-1/√d, 1/√d]`. Biases are zero except
/// the forget gate, which starts at one.
pub fn init_parameters(seed: u64, d: usize, m: usize) -> Result<LstmParameters> {
    init_with(&mut ChaCha8Rng::seed_from_u64(seed), d, m)
}

fn init_with(rng: &mut ChaCha8Rng, d: usize, m: usize) -> Result<LstmParameters> {
    if d == 0 || m == 0 {
        return Err(argument(format!(
            "hidden and input sizes must be positive (got d={d}, m={m})"
        )));
    }
    let bound = 1.0 / (d as f64).sqrt();
    let mut p = LstmParameters::zeros(d, m);
    for gate in p.gates_mut() {
        for w in gate
            .recurrent
            .as_mut_slice()
            .iter_mut()
            .chain(gate.input.as_mut_slice())
        {
            *w = rng.random_range(-bound..=bound);
        }
    }
    p.forget_gate.bias.fill(1.0);
    Ok(p)
}
