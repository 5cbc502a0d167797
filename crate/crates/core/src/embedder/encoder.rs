//! Character-level bidirectional encoder with split-point attention.
//!
//! For an `n`-character word padded as `^ c_1 … c_n $`, the forward LSTM reads
//! `^ c_1 … c_n` and the backward LSTM reads `$ c_n … c_1`. State `i`
//! concatenates the forward state after `c_i` (or after `^` for `i = 0`) with
//! the backward state after `c_{i+1}` (or after `$` for `i = n`), so each of
//! the `n + 1` states describes one split of the word into a prefix and a
//! suffix. A shared `tanh` layer compresses each concatenation to `d_word`,
//! and attention mixes the compressed states into the word vector.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::activations::{affine_tanh_into, softmax_backward, softmax_in_place};
use crate::numerics::{dot, LstmParams, LstmTrace, Matrix};

/// Bahdanau-style scorer `score(h) = v · tanh(W h)`, no biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attention {
    /// `d_attn × d_word`
    pub w: Matrix,
    /// `d_attn`
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharEncoder {
    /// `|A| × d_C`
    pub char_embeddings: Matrix,
    pub forward: LstmParams,
    pub backward: LstmParams,
    /// `d_word × 2·d_LSTM`
    pub compress_w: Matrix,
    pub compress_b: Vec<f64>,
    /// `None` gives the attention-free variant, which compresses the final
    /// forward and backward states instead of mixing split states.
    pub attention: Option<Attention>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderDims {
    pub chars: usize,
    pub char_dim: usize,
    pub lstm_dim: usize,
    pub word_dim: usize,
    pub attn_dim: usize,
}

/// Compressed split states `h_0 … h_n` of one word.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderStates {
    pub states: Vec<Vec<f64>>,
}

impl EncoderStates {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionResult {
    pub weights: Vec<f64>,
    pub vector: Vec<f64>,
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug, Clone)]
pub struct EncoderPass {
    ids: Vec<u32>,
    forward: LstmTrace,
    backward: LstmTrace,
    /// Concatenated `[h^f ; h^b]` inputs to the compression layer.
    concat: Vec<Vec<f64>>,
    /// Compression outputs.
    compressed: Vec<Vec<f64>>,
    /// `tanh(W_a h_i)` per state; empty without attention.
    scorer_hidden: Vec<Vec<f64>>,
    weights: Vec<f64>,
    output: Vec<f64>,
}

impl EncoderPass {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    /// Attention weights over split positions `0..=n` (empty without attention).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.compressed
    }
}

impl CharEncoder {
    pub fn zeros(dims: EncoderDims, attention: bool) -> Self {
        CharEncoder {
            char_embeddings: Matrix::zeros(dims.chars, dims.char_dim),
            forward: LstmParams::zeros(dims.char_dim, dims.lstm_dim),
            backward: LstmParams::zeros(dims.char_dim, dims.lstm_dim),
            compress_w: Matrix::zeros(dims.word_dim, 2 * dims.lstm_dim),
            compress_b: vec![0.0; dims.word_dim],
            attention: attention.then(|| Attention {
                w: Matrix::zeros(dims.attn_dim, dims.word_dim),
                v: vec![0.0; dims.attn_dim],
            }),
        }
    }

    /// Random initialization: LSTMs as in [`LstmParams::init`], dense layers
    /// uniform in `±1/√fan_in`, character embeddings uniform in `±0.1`.
    pub fn init<R: Rng>(dims: EncoderDims, attention: bool, rng: &mut R) -> Self {
        let mut enc = Self::zeros(dims, attention);
        for x in enc.char_embeddings.as_mut_slice() {
            *x = rng.gen_range(-0.1..0.1);
        }
        enc.forward = LstmParams::init(dims.char_dim, dims.lstm_dim, rng);
        enc.backward = LstmParams::init(dims.char_dim, dims.lstm_dim, rng);
        let b = 1.0 / ((2 * dims.lstm_dim) as f64).sqrt();
        for x in enc.compress_w.as_mut_slice() {
            *x = rng.gen_range(-b..b);
        }
        if let Some(att) = enc.attention.as_mut() {
            let b = 1.0 / (dims.word_dim as f64).sqrt();
            for x in att.w.as_mut_slice() {
                *x = rng.gen_range(-b..b);
            }
            let b = 1.0 / (dims.attn_dim as f64).sqrt();
            for x in att.v.iter_mut() {
                *x = rng.gen_range(-b..b);
            }
        }
        enc
    }

    pub fn dims(&self) -> EncoderDims {
        EncoderDims {
            chars: self.char_embeddings.rows(),
            char_dim: self.char_embeddings.cols(),
            lstm_dim: self.forward.hidden_dim(),
            word_dim: self.compress_w.rows(),
            attn_dim: self.attention.as_ref().map_or(0, |a| a.v.len()),
        }
    }

    pub fn has_attention(&self) -> bool {
        self.attention.is_some()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.dims(), self.has_attention())
    }

    /// Names of the tensors returned by [`tensors`](Self::tensors), in order.
    pub fn tensor_names(&self) -> Vec<&'static str> {
        let mut names = vec![
            "char_embeddings",
            "forward.w_input",
            "forward.w_recurrent",
            "forward.bias",
            "backward.w_input",
            "backward.w_recurrent",
            "backward.bias",
            "compress.w",
            "compress.b",
        ];
        if self.attention.is_some() {
            names.extend(["attention.w", "attention.v"]);
        }
        names
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![self.char_embeddings.as_slice()];
        out.extend(self.forward.tensors());
        out.extend(self.backward.tensors());
        out.push(self.compress_w.as_slice());
        out.push(&self.compress_b);
        if let Some(att) = &self.attention {
            out.push(att.w.as_slice());
            out.push(&att.v);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.char_embeddings.as_mut_slice()];
        out.extend(self.forward.tensors_mut());
        out.extend(self.backward.tensors_mut());
        out.push(self.compress_w.as_mut_slice());
        out.push(&mut self.compress_b);
        if let Some(att) = &mut self.attention {
            out.push(att.w.as_mut_slice());
            out.push(&mut att.v);
        }
        out
    }

    /// `self += other`, tensor by tensor.
    pub fn add_assign(&mut self, other: &CharEncoder) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.fill(0.0);
        }
    }

    fn check_ids(&self, ids: &[u32]) -> Result<()> {
        if ids.len() < 3 {
            return Err(Error::EmptyWord);
        }
        let size = self.char_embeddings.rows();
        if let Some(&bad) = ids.iter().find(|&&id| id as usize >= size) {
            return Err(Error::CharIdOutOfRange {
                id: bad as usize,
                size,
            });
        }
        Ok(())
    }

    fn run_lstms(&self, ids: &[u32]) -> (LstmTrace, LstmTrace) {
        let n = ids.len() - 2;
        let emb = &self.char_embeddings;
        let fwd = self
            .forward
            .run(ids[..=n].iter().map(|&c| emb.row(c as usize)));
        let bwd = self
            .backward
            .run(ids[1..].iter().rev().map(|&c| emb.row(c as usize)));
        (fwd, bwd)
    }

    fn compress(&self, hf: &[f64], hb: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut cat = Vec::with_capacity(hf.len() + hb.len());
        cat.extend_from_slice(hf);
        cat.extend_from_slice(hb);
        let mut out = vec![0.0; self.compress_w.rows()];
        affine_tanh_into(&self.compress_w, &self.compress_b, &cat, &mut out);
        (cat, out)
    }

    /// Split states `h_0 … h_n` for a padded id sequence of length `n + 2`.
    pub fn encode(&self, ids: &[u32]) -> Result<EncoderStates> {
        self.check_ids(ids)?;
        let n = ids.len() - 2;
        let (fwd, bwd) = self.run_lstms(ids);
        let states = (0..=n)
            .map(|i| self.compress(fwd.hidden_at(i), bwd.hidden_at(n - i)).1)
            .collect();
        Ok(EncoderStates { states })
    }

    /// Attention over already computed states.
    pub fn attend(&self, states: &EncoderStates) -> Result<AttentionResult> {
        let att = self.attention.as_ref().ok_or_else(|| Error::Unsupported {
            what: "attention",
            detail: "encoder has no attention layer".into(),
        })?;
        if states.is_empty() {
            return Err(Error::EmptySoftmax);
        }
        let mut hidden = vec![0.0; att.w.rows()];
        let mut weights = Vec::with_capacity(states.len());
        for h in &states.states {
            if h.len() != att.w.cols() {
                return Err(Error::shape("attend", att.w.cols(), h.len()));
            }
            att.w.matvec_into(h, &mut hidden);
            hidden.iter_mut().for_each(|x| *x = x.tanh());
            weights.push(dot(&att.v, &hidden));
        }
        softmax_in_place(&mut weights)?;
        let mut vector = vec![0.0; att.w.cols()];
        for (a, h) in weights.iter().zip(&states.states) {
            crate::numerics::axpy(*a, h, &mut vector);
        }
        Ok(AttentionResult { weights, vector })
    }

    /// Full forward evaluation of `f(w)` with caches for [`backward`](Self::backward).
    pub fn forward_pass(&self, ids: &[u32]) -> Result<EncoderPass> {
        self.check_ids(ids)?;
        let n = ids.len() - 2;
        let (fwd, bwd) = self.run_lstms(ids);
        let mut pass = EncoderPass {
            ids: ids.to_vec(),
            forward: fwd,
            backward: bwd,
            concat: Vec::new(),
            compressed: Vec::new(),
            scorer_hidden: Vec::new(),
            weights: Vec::new(),
            output: Vec::new(),
        };
        match &self.attention {
            Some(att) => {
                for i in 0..=n {
                    let (cat, h) =
                        self.compress(pass.forward.hidden_at(i), pass.backward.hidden_at(n - i));
                    let mut u = att.w.matvec(&h)?;
                    u.iter_mut().for_each(|x| *x = x.tanh());
                    pass.weights.push(dot(&att.v, &u));
                    pass.scorer_hidden.push(u);
                    pass.concat.push(cat);
                    pass.compressed.push(h);
                }
                softmax_in_place(&mut pass.weights)?;
                let mut out = vec![0.0; self.compress_w.rows()];
                for (a, h) in pass.weights.iter().zip(&pass.compressed) {
                    crate::numerics::axpy(*a, h, &mut out);
                }
                pass.output = out;
            }
            None => {
                let (cat, h) = self.compress(pass.forward.hidden_at(n), pass.backward.hidden_at(n));
                pass.concat.push(cat);
                pass.compressed.push(h.clone());
                pass.output = h;
            }
        }
        Ok(pass)
    }

    /// Accumulates `∂L/∂θ` into `grads` given `∂L/∂f(w)`.
    pub fn backward(&self, pass: &EncoderPass, grad_output: &[f64], grads: &mut CharEncoder) {
        let n = pass.ids.len() - 2;
        let ld = self.forward.hidden_dim();
        let mut grad_fwd = vec![vec![0.0; ld]; n + 1];
        let mut grad_bwd = vec![vec![0.0; ld]; n + 1];

        // Gradient at each compressed state, then through the tanh layer.
        let mut grad_states: Vec<Vec<f64>> = match (&self.attention, &mut grads.attention) {
            (Some(att), Some(gatt)) => {
                let grad_weights: Vec<f64> = pass
                    .compressed
                    .iter()
                    .map(|h| dot(grad_output, h))
                    .collect();
                let grad_scores = softmax_backward(&pass.weights, &grad_weights);
                let mut out = Vec::with_capacity(n + 1);
                let mut dz = vec![0.0; att.v.len()];
                for i in 0..=n {
                    let mut dh: Vec<f64> =
                        grad_output.iter().map(|g| g * pass.weights[i]).collect();
                    let u = &pass.scorer_hidden[i];
                    let ds = grad_scores[i];
                    crate::numerics::axpy(ds, u, &mut gatt.v);
                    for ((z, &vj), &uj) in dz.iter_mut().zip(&att.v).zip(u) {
                        *z = ds * vj * (1.0 - uj * uj);
                    }
                    gatt.w.add_outer(&dz, &pass.compressed[i]);
                    att.w.matvec_t_acc(&dz, &mut dh);
                    out.push(dh);
                }
                out
            }
            _ => vec![grad_output.to_vec()],
        };

        let mut dcat = vec![0.0; 2 * ld];
        for (k, dh) in grad_states.iter_mut().enumerate() {
            for (d, h) in dh.iter_mut().zip(&pass.compressed[k]) {
                *d *= 1.0 - h * h;
            }
            grads.compress_w.add_outer(dh, &pass.concat[k]);
            for (b, d) in grads.compress_b.iter_mut().zip(dh.iter()) {
                *b += d;
            }
            dcat.fill(0.0);
            self.compress_w.matvec_t_acc(dh, &mut dcat);
            // State k pairs forward step i with backward step n - i.
            let i = if self.attention.is_some() { k } else { n };
            let j = if self.attention.is_some() { n - k } else { n };
            for (g, d) in grad_fwd[i].iter_mut().zip(&dcat[..ld]) {
                *g += d;
            }
            for (g, d) in grad_bwd[j].iter_mut().zip(&dcat[ld..]) {
                *g += d;
            }
        }

        let dx_fwd = self
            .forward
            .backward(&pass.forward, &grad_fwd, &mut grads.forward);
        let dx_bwd = self
            .backward
            .backward(&pass.backward, &grad_bwd, &mut grads.backward);
        for (t, dx) in dx_fwd.iter().enumerate() {
            let row = grads.char_embeddings.row_mut(pass.ids[t] as usize);
            crate::numerics::axpy(1.0, dx, row);
        }
        for (s, dx) in dx_bwd.iter().enumerate() {
            let row = grads.char_embeddings.row_mut(pass.ids[n + 1 - s] as usize);
            crate::numerics::axpy(1.0, dx, row);
        }
    }
}
