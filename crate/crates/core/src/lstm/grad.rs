//! Backpropagation through time for the squared-error loss of one window.

use super::cell::{readout, unroll, StepCache};
use super::params::Network;
use crate::error::{argument, check_len, Result};
use crate::linalg::axpy;

/// Gradients of `(prediction - target)²` with respect to every parameter.
#[derive(Debug, Clone)]
pub struct WindowGradients {
    /// Same layout as the network.
    pub grads: Network,
    pub loss: f64,
    pub prediction: f64,
}

/// Exact BPTT gradients for one `(inputs, target)` window.
pub fn bptt_gradients(net: &Network, inputs: &[Vec<f64>], target: f64) -> Result<WindowGradients> {
    if inputs.is_empty() {
        return Err(argument("bptt_gradients needs at least one input"));
    }
    for x in inputs {
        check_len("window input", net.input_size(), x.len())?;
    }
    let mut grads = Network::zeros(net.hidden_size(), net.input_size());
    let (loss, prediction) =
        accumulate_gradients(net, inputs.iter().map(Vec::as_slice), target, &mut grads);
    Ok(WindowGradients {
        grads,
        loss,
        prediction,
    })
}

/// Adds this window's gradients into `grads`; returns `(loss, prediction)`.
pub(crate) fn accumulate_gradients<'a>(
    net: &Network,
    inputs: impl IntoIterator<Item = &'a [f64]>,
    target: f64,
    grads: &mut Network,
) -> (f64, f64) {
    let caches = unroll(&net.cell, inputs);
    let last = caches.last().expect("window is non-empty");
    let prediction = readout(net, &last.h);
    let err = prediction - target;
    let loss = err * err;
    let dy = 2.0 * err;
    if dy == 0.0 {
        return (loss, prediction);
    }

    axpy(dy, &last.h, &mut grads.readout.weights);
    grads.readout.bias += dy;

    let d = net.hidden_size();
    let mut dh: Vec<f64> = net.readout.weights.iter().map(|w| dy * w).collect();
    let mut dc_next = vec![0.0; d];
    let mut d_in = vec![0.0; d];
    let mut d_out = vec![0.0; d];
    let mut d_forget = vec![0.0; d];
    let mut d_cand = vec![0.0; d];

    for s in caches.iter().rev() {
        backward_step(
            s,
            &dh,
            &mut dc_next,
            [&mut d_in, &mut d_out, &mut d_forget, &mut d_cand],
        );
        let mut dh_prev = vec![0.0; d];
        let pre = [&d_in, &d_out, &d_forget, &d_cand];
        for (gate, (grad, dpre)) in net
            .cell
            .gates()
            .into_iter()
            .zip(grads.cell.gates_mut().into_iter().zip(pre))
        {
            grad.recurrent.add_outer(dpre, &s.h_prev);
            grad.input.add_outer(dpre, &s.x);
            axpy(1.0, dpre, &mut grad.bias);
            gate.recurrent.mul_vec_transposed_add(dpre, &mut dh_prev);
        }
        dh = dh_prev;
    }
    (loss, prediction)
}

/// Turns `dL/dh_t` (plus the carried `dL/dC_t`) into gate pre-activation
/// gradients, and leaves `dL/dC_{t-1}` in `dc`.
fn backward_step(s: &StepCache, dh: &[f64], dc: &mut [f64], dpre: [&mut Vec<f64>; 4]) {
    let [d_in, d_out, d_forget, d_cand] = dpre;
    for k in 0..dh.len() {
        let (i, o, f, g) = (s.input[k], s.output[k], s.forget[k], s.candidate[k]);
        let t = s.tanh_c[k];
        d_out[k] = dh[k] * t * o * (1.0 - o);
        let dck = dc[k] + dh[k] * o * (1.0 - t * t);
        d_in[k] = dck * g * i * (1.0 - i);
        d_cand[k] = dck * i * (1.0 - g * g);
        d_forget[k] = dck * s.c_prev[k] * f * (1.0 - f);
        dc[k] = dck * f;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::cell::forward_sequence;

    fn loss(net: &Network, inputs: &[Vec<f64>], target: f64) -> f64 {
        let (_, y) = forward_sequence(net, inputs).unwrap();
        (y - target).powi(2)
    }

    #[test]
    fn zero_loss_gives_zero_gradients() {
        let net = Network::init(2, 3, 1).unwrap();
        let inputs = vec![vec![0.3], vec![0.1], vec![0.8]];
        let (_, y) = forward_sequence(&net, &inputs).unwrap();
        let g = bptt_gradients(&net, &inputs, y).unwrap();
        assert_eq!(g.loss, 0.0);
        assert!(g.grads.to_flat().iter().all(|&v| v == 0.0));
    }

    // Forget-gate bias on a zero initial cell state: at t=1 the forget gate
    // multiplies C_0 = 0, so only later steps contribute.
    #[test]
    fn forget_bias_matches_finite_differences() {
        let net = Network::init(11, 2, 1).unwrap();
        let inputs = vec![vec![0.5], vec![-0.2], vec![0.9], vec![0.4]];
        let target = 0.25;
        let g = bptt_gradients(&net, &inputs, target).unwrap();
        let eps = 1e-6;
        for k in 0..2 {
            let mut plus = net.clone();
            plus.cell.forget_gate.bias[k] += eps;
            let mut minus = net.clone();
            minus.cell.forget_gate.bias[k] -= eps;
            let fd = (loss(&plus, &inputs, target) - loss(&minus, &inputs, target)) / (2.0 * eps);
            let an = g.grads.cell.forget_gate.bias[k];
            assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), "{fd} vs {an}");
        }

        // Single-step window: the forget gate sees only C_0 = 0.
        let one = vec![vec![0.5]];
        let g1 = bptt_gradients(&net, &one, target).unwrap();
        assert!(g1.grads.cell.forget_gate.bias.iter().all(|&v| v == 0.0));
        assert!(g1
            .grads
            .cell
            .forget_gate
            .recurrent
            .as_slice()
            .iter()
            .all(|&v| v == 0.0));
    }
}
