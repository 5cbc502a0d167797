//! Standard (non-peephole) LSTM cell with an explicit backward pass.
//!
//! Gate pre-activations are stacked in one `4·d_h` vector in the order
//! input, forget, output, candidate:
//!
//! ```text
//! i = σ(W_i x + U_i h + b_i)      f = σ(W_f x + U_f h + b_f)
//! o = σ(W_o x + U_o h + b_o)      g = tanh(W_g x + U_g h + b_g)
//! c' = f ⊙ c + i ⊙ g              h' = o ⊙ tanh(c')
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::activations::sigmoid;
use crate::numerics::{axpy, Matrix};

const GATES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    /// `4·d_h × d_in`
    pub w_input: Matrix,
    /// `4·d_h × d_h`
    pub w_recurrent: Matrix,
    /// `4·d_h`
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            w_input: Matrix::zeros(GATES * hidden, input),
            w_recurrent: Matrix::zeros(GATES * hidden, hidden),
            bias: vec![0.0; GATES * hidden],
        }
    }

    /// Weights uniform in `±1/√d_h`, forget-gate bias 1, other biases 0.
    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut p = Self::zeros(input, hidden);
        for w in p
            .w_input
            .as_mut_slice()
            .iter_mut()
            .chain(p.w_recurrent.as_mut_slice())
        {
            *w = rng.gen_range(-bound..bound);
        }
        p.bias[hidden..2 * hidden].fill(1.0);
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_recurrent.cols()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.hidden_dim())
    }

    /// Flat views of every tensor, in a fixed order.
    pub fn tensors(&self) -> [&[f64]; 3] {
        [
            self.w_input.as_slice(),
            self.w_recurrent.as_slice(),
            &self.bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 3] {
        [
            self.w_input.as_mut_slice(),
            self.w_recurrent.as_mut_slice(),
            &mut self.bias,
        ]
    }

    /// One checked cell step.
    pub fn step(&self, x: &[f64], prev: &LstmState) -> Result<LstmState> {
        let hidden = self.hidden_dim();
        if x.len() != self.input_dim() {
            return Err(Error::shape("lstm_step input", self.input_dim(), x.len()));
        }
        if prev.h.len() != hidden || prev.c.len() != hidden {
            return Err(Error::shape(
                "lstm_step state",
                hidden,
                format!("h={} c={}", prev.h.len(), prev.c.len()),
            ));
        }
        let mut gates = vec![0.0; GATES * hidden];
        let mut next = LstmState::zeros(hidden);
        self.step_raw(x, &prev.h, &prev.c, &mut gates, &mut next.c, &mut next.h);
        Ok(next)
    }

    /// Unchecked step writing activated gates, new cell and new hidden state.
    fn step_raw(
        &self,
        x: &[f64],
        h_prev: &[f64],
        c_prev: &[f64],
        gates: &mut [f64],
        c: &mut [f64],
        h: &mut [f64],
    ) {
        let hd = self.hidden_dim();
        self.w_input.matvec_into(x, gates);
        for (r, g) in gates.iter_mut().enumerate() {
            *g += self.bias[r] + crate::numerics::dot(self.w_recurrent.row(r), h_prev);
        }
        for j in 0..hd {
            let i = sigmoid(gates[j]);
            let f = sigmoid(gates[hd + j]);
            let o = sigmoid(gates[2 * hd + j]);
            let g = gates[3 * hd + j].tanh();
            gates[j] = i;
            gates[hd + j] = f;
            gates[2 * hd + j] = o;
            gates[3 * hd + j] = g;
            c[j] = f * c_prev[j] + i * g;
            h[j] = o * c[j].tanh();
        }
    }

    /// Runs the cell over `inputs` from a zero state, keeping everything the
    /// backward pass needs.
    pub fn run<'a, I>(&self, inputs: I) -> LstmTrace
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let hd = self.hidden_dim();
        let mut trace = LstmTrace {
            hidden: hd,
            inputs: Vec::new(),
            gates: Vec::new(),
            cells: Vec::new(),
            hiddens: Vec::new(),
        };
        let zeros = vec![0.0; hd];
        for x in inputs {
            let t = trace.len();
            let mut gates = vec![0.0; GATES * hd];
            let mut c = vec![0.0; hd];
            let mut h = vec![0.0; hd];
            {
                let (h_prev, c_prev) = if t == 0 {
                    (&zeros[..], &zeros[..])
                } else {
                    (trace.hidden_at(t - 1), trace.cell_at(t - 1))
                };
                self.step_raw(x, h_prev, c_prev, &mut gates, &mut c, &mut h);
            }
            trace.inputs.extend_from_slice(x);
            trace.gates.extend_from_slice(&gates);
            trace.cells.extend_from_slice(&c);
            trace.hiddens.extend_from_slice(&h);
        }
        trace
    }

    /// Backpropagation through time. `grad_hidden[t]` is the loss gradient
    /// arriving at hidden state `t` from outside the recurrence. Parameter
    /// gradients are accumulated into `grads`; the returned vectors are the
    /// gradients w.r.t. each input.
    pub fn backward(
        &self,
        trace: &LstmTrace,
        grad_hidden: &[Vec<f64>],
        grads: &mut LstmParams,
    ) -> Vec<Vec<f64>> {
        let hd = self.hidden_dim();
        let steps = trace.len();
        debug_assert_eq!(grad_hidden.len(), steps);
        let mut grad_inputs = vec![vec![0.0; self.input_dim()]; steps];
        let mut dh_next = vec![0.0; hd];
        let mut dc_next = vec![0.0; hd];
        let mut dz = vec![0.0; GATES * hd];
        let zeros = vec![0.0; hd];

        for t in (0..steps).rev() {
            let gates = trace.gates_at(t);
            let c = trace.cell_at(t);
            let (h_prev, c_prev) = if t == 0 {
                (&zeros[..], &zeros[..])
            } else {
                (trace.hidden_at(t - 1), trace.cell_at(t - 1))
            };
            for j in 0..hd {
                let i = gates[j];
                let f = gates[hd + j];
                let o = gates[2 * hd + j];
                let g = gates[3 * hd + j];
                let tc = c[j].tanh();
                let dh = grad_hidden[t][j] + dh_next[j];
                let d_o = dh * tc;
                let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
                let d_i = dc * g;
                let d_g = dc * i;
                let d_f = dc * c_prev[j];
                dc_next[j] = dc * f;
                dz[j] = d_i * i * (1.0 - i);
                dz[hd + j] = d_f * f * (1.0 - f);
                dz[2 * hd + j] = d_o * o * (1.0 - o);
                dz[3 * hd + j] = d_g * (1.0 - g * g);
            }
            // Weight gradients and both transposed products in one sweep over
            // the gate rows.
            let x = trace.input_at(t);
            let grad_x = &mut grad_inputs[t];
            dh_next.fill(0.0);
            for (r, &d) in dz.iter().enumerate() {
                grads.bias[r] += d;
                if d != 0.0 {
                    axpy(d, x, grads.w_input.row_mut(r));
                    axpy(d, h_prev, grads.w_recurrent.row_mut(r));
                    axpy(d, self.w_input.row(r), grad_x);
                    axpy(d, self.w_recurrent.row(r), &mut dh_next);
                }
            }
        }
        grad_inputs
    }
}

/// Cached forward activations of one sequence.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    hidden: usize,
    inputs: Vec<f64>,
    gates: Vec<f64>,
    cells: Vec<f64>,
    hiddens: Vec<f64>,
}

impl LstmTrace {
    pub fn len(&self) -> usize {
        self.cells.len() / self.hidden.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn hidden_at(&self, t: usize) -> &[f64] {
        &self.hiddens[t * self.hidden..(t + 1) * self.hidden]
    }

    pub fn cell_at(&self, t: usize) -> &[f64] {
        &self.cells[t * self.hidden..(t + 1) * self.hidden]
    }

    fn gates_at(&self, t: usize) -> &[f64] {
        &self.gates[t * GATES * self.hidden..(t + 1) * GATES * self.hidden]
    }

    fn input_at(&self, t: usize) -> &[f64] {
        let d = self.inputs.len() / self.len();
        &self.inputs[t * d..(t + 1) * d]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_zero_state_stays_zero() {
        let p = LstmParams::zeros(3, 2);
        let next = p.step(&[0.3, -1.0, 2.0], &LstmState::zeros(2)).unwrap();
        assert_eq!(next.h, vec![0.0, 0.0]);
        assert_eq!(next.c, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_params_unit_cell() {
        let p = LstmParams::zeros(3, 2);
        let prev = LstmState {
            h: vec![0.0; 2],
            c: vec![1.0; 2],
        };
        let next = p.step(&[1.0, 1.0, 1.0], &prev).unwrap();
        for j in 0..2 {
            assert!((next.c[j] - 0.5).abs() < 1e-15);
            assert!((next.h[j] - 0.5 * 0.5f64.tanh()).abs() < 1e-15);
            assert!((next.h[j] - 0.23106).abs() < 1e-5);
        }
    }

    #[test]
    fn wrong_input_dim_is_an_error() {
        let p = LstmParams::zeros(3, 2);
        assert!(p.step(&[1.0, 1.0], &LstmState::zeros(2)).is_err());
        assert!(p.step(&[1.0; 3], &LstmState::zeros(3)).is_err());
    }

    #[test]
    fn init_sets_forget_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = LstmParams::init(5, 4, &mut rng);
        assert_eq!(&p.bias[4..8], &[1.0; 4]);
        assert!(p.bias[..4].iter().all(|&b| b == 0.0));
        assert!(p.w_input.as_slice().iter().all(|w| w.abs() <= 0.5));
    }

    #[test]
    fn run_matches_repeated_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = LstmParams::init(2, 3, &mut rng);
        let xs = [vec![0.5, -0.1], vec![0.0, 1.0], vec![-0.7, 0.2]];
        let trace = p.run(xs.iter().map(|x| x.as_slice()));
        let mut state = LstmState::zeros(3);
        for (t, x) in xs.iter().enumerate() {
            state = p.step(x, &state).unwrap();
            assert_eq!(trace.hidden_at(t), state.h.as_slice());
            assert_eq!(trace.cell_at(t), state.c.as_slice());
        }
    }

    proptest! {
        #[test]
        fn cell_growth_is_bounded(
            seed in 0u64..1000,
            c0 in prop::collection::vec(-5.0f64..5.0, 4),
            x in prop::collection::vec(-2.0f64..2.0, 3),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = LstmParams::init(3, 4, &mut rng);
            let prev = LstmState { h: vec![0.1; 4], c: c0.clone() };
            let next = p.step(&x, &prev).unwrap();
            for j in 0..4 {
                prop_assert!(next.c[j].abs() <= c0[j].abs() + 1.0);
                prop_assert!(next.h[j].is_finite());
            }
        }
    }
}
