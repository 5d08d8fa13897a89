use serde::{Deserialize, Serialize};

use super::params::{LstmParameters, Network};
use crate::error::{argument, check_len, Result};
use crate::linalg::{dot, sigmoid};

/// Cell and hidden state after one step. The cell's output `z_t` is `h_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmState {
    pub cell: Vec<f64>,
    pub hidden: Vec<f64>,
}

impl LstmState {
    pub fn zeros(d: usize) -> Self {
        Self {
            cell: vec![0.0; d],
            hidden: vec![0.0; d],
        }
    }

    pub fn output(&self) -> &[f64] {
        &self.hidden
    }
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    pub forget: Vec<f64>,
    pub candidate: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

pub(crate) fn step(p: &LstmParameters, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> StepCache {
    let mut input = p.input_gate.preactivation(h_prev, x);
    let mut output = p.output_gate.preactivation(h_prev, x);
    let mut forget = p.forget_gate.preactivation(h_prev, x);
    let mut candidate = p.candidate.preactivation(h_prev, x);
    input.iter_mut().for_each(|v| *v = sigmoid(*v));
    output.iter_mut().for_each(|v| *v = sigmoid(*v));
    forget.iter_mut().for_each(|v| *v = sigmoid(*v));
    candidate.iter_mut().for_each(|v| *v = v.tanh());

    let c: Vec<f64> = (0..p.hidden_size)
        .map(|k| input[k] * candidate[k] + forget[k] * c_prev[k])
        .collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = output.iter().zip(&tanh_c).map(|(o, t)| o * t).collect();

    debug_assert!(input
        .iter()
        .chain(&output)
        .chain(&forget)
        .all(|&g| !(g < 0.0 || g > 1.0)));
    debug_assert!(h.iter().all(|&v| !(v.abs() > 1.0)));

    StepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        input,
        output,
        forget,
        candidate,
        c,
        tanh_c,
        h,
    }
}

fn check_step_shapes(p: &LstmParameters, x: &[f64], prev: &LstmState) -> Result<()> {
    check_len("cell input", p.input_size, x.len())?;
    check_len("previous hidden state", p.hidden_size, prev.hidden.len())?;
    check_len("previous cell state", p.hidden_size, prev.cell.len())
}

/// One LSTM step: sigmoid input/output/forget gates, tanh candidate,
/// `C_t = i·Ĉ + f·C_{t-1}` and `h_t = o·tanh(C_t)`.
pub fn cell_forward(p: &LstmParameters, x: &[f64], prev: &LstmState) -> Result<LstmState> {
    check_step_shapes(p, x, prev)?;
    let s = step(p, x, &prev.hidden, &prev.cell);
    Ok(LstmState {
        cell: s.c,
        hidden: s.h,
    })
}

/// Runs the cell over `inputs` from a zero state and keeps every step.
pub(crate) fn unroll<'a>(
    p: &LstmParameters,
    inputs: impl IntoIterator<Item = &'a [f64]>,
) -> Vec<StepCache> {
    let d = p.hidden_size;
    let mut caches: Vec<StepCache> = Vec::new();
    let zeros = vec![0.0; d];
    for x in inputs {
        let s = match caches.last() {
            Some(prev) => step(p, x, &prev.h, &prev.c),
            None => step(p, x, &zeros, &zeros),
        };
        caches.push(s);
    }
    caches
}

pub(crate) fn readout(net: &Network, h: &[f64]) -> f64 {
    dot(&net.readout.weights, h) + net.readout.bias
}

/// Last hidden state and prediction for a scalar-input window.
pub(crate) fn run_scalar_window(net: &Network, window: &[f64]) -> (Vec<f64>, f64) {
    let p = &net.cell;
    let d = p.hidden_size;
    let mut h = vec![0.0; d];
    let mut c = vec![0.0; d];
    for x in window.chunks(1) {
        let s = step(p, x, &h, &c);
        h = s.h;
        c = s.c;
    }
    let y = readout(net, &h);
    (h, y)
}

/// Chains [`cell_forward`] from the zero state and applies the readout to the
/// final hidden state.
pub fn forward_sequence(net: &Network, inputs: &[Vec<f64>]) -> Result<(Vec<LstmState>, f64)> {
    if inputs.is_empty() {
        return Err(argument("forward_sequence needs at least one input"));
    }
    for x in inputs {
        check_len("sequence input", net.input_size(), x.len())?;
    }
    let caches = unroll(&net.cell, inputs.iter().map(Vec::as_slice));
    let prediction = readout(net, &caches.last().expect("non-empty").h);
    let states = caches
        .into_iter()
        .map(|s| LstmState {
            cell: s.c,
            hidden: s.h,
        })
        .collect();
    Ok((states, prediction))
}
