use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::encoder::{AttentionResult, CharEncoder, EncoderDims, EncoderStates};
use crate::corpus::{CharVocab, Vocab};
use crate::error::{Error, Result};
use crate::numerics::{AdamConfig, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Sgns,
    C2vNoAtt,
    Char2vec,
    PpmiSvd,
}

impl ModelKind {
    pub fn is_char_model(self) -> bool {
        matches!(self, ModelKind::C2vNoAtt | ModelKind::Char2vec)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Sgns => "sgns",
            ModelKind::C2vNoAtt => "c2v-no-att",
            ModelKind::Char2vec => "char2vec",
            ModelKind::PpmiSvd => "ppmi-svd",
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
        match s {
            "sgns" => Ok(ModelKind::Sgns),
            "c2v-no-att" => Ok(ModelKind::C2vNoAtt),
            "char2vec" => Ok(ModelKind::Char2vec),
            "ppmi-svd" => Ok(ModelKind::PpmiSvd),
            other => Err(Error::Config(format!(
                "unknown model kind {other:?} (expected sgns, c2v-no-att, char2vec or ppmi-svd)"
            ))),
        }
    }
}

/// Training hyperparameters. Defaults follow the reference setup: window 3,
/// 11 negatives, 3 epochs, words seen at least 6 times, `d_C = 64`,
/// `d_LSTM = 256`, `d_word = 256`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: u64,
    pub noise_exponent: f64,
    pub char_dim: usize,
    pub lstm_dim: usize,
    pub word_dim: usize,
    /// Attention inner size; `None` means `word_dim`.
    pub attn_dim: Option<usize>,
    pub adam: AdamConfig,
    /// Initial SGD step of the word-level stage, decayed linearly.
    pub sgns_lr: f64,
    /// Target positions per optimizer step in the character stage.
    pub batch_size: usize,
    pub seed: u64,
    pub workers: usize,
    /// Keep the pretrained context table fixed during character training.
    pub freeze_context: bool,
    /// Pairs per loss-trace point.
    pub trace_every: u64,
    /// Where to dump the model if training diverges.
    #[serde(skip)]
    pub nan_dump: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            kind: ModelKind::Char2vec,
            window: 3,
            negatives: 11,
            epochs: 3,
            min_count: 6,
            noise_exponent: 0.75,
            char_dim: 64,
            lstm_dim: 256,
            word_dim: 256,
            attn_dim: None,
            adam: AdamConfig::default(),
            sgns_lr: 0.025,
            batch_size: 32,
            seed: 1,
            workers: 1,
            freeze_context: true,
            trace_every: 100_000,
            nan_dump: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.window < 1 {
            return bad("window must be >= 1");
        }
        if self.negatives < 1 {
            return bad("negatives must be >= 1");
        }
        if self.epochs < 1 {
            return bad("epochs must be >= 1");
        }
        if self.min_count < 1 {
            return bad("min-count must be >= 1");
        }
        if !(self.noise_exponent > 0.0 && self.noise_exponent.is_finite()) {
            return bad("noise exponent must be > 0");
        }
        if self.char_dim == 0 || self.lstm_dim == 0 || self.word_dim == 0 {
            return bad("dimensions must be positive");
        }
        if self.attn_dim == Some(0) {
            return bad("attention dimension must be positive");
        }
        if self.batch_size == 0 || self.workers == 0 || self.trace_every == 0 {
            return bad("batch size, workers and trace interval must be positive");
        }
        if !(self.sgns_lr > 0.0) || !(self.adam.lr > 0.0) {
            return bad("learning rates must be positive");
        }
        Ok(())
    }

    pub fn attn_dim(&self) -> usize {
        self.attn_dim.unwrap_or(self.word_dim)
    }

    pub(crate) fn encoder_dims(&self, chars: usize) -> EncoderDims {
        EncoderDims {
            chars,
            char_dim: self.char_dim,
            lstm_dim: self.lstm_dim,
            word_dim: self.word_dim,
            attn_dim: self.attn_dim(),
        }
    }
}

/// A trained (or freshly initialized) model of any of the four kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: TrainConfig,
    pub vocab: Vocab,
    /// Word-level vectors (SGNS target table or PPMI-SVD embeddings).
    pub target: Option<Matrix>,
    /// SGNS context table.
    pub context: Option<Matrix>,
    pub context_frozen: bool,
    pub chars: Option<CharVocab>,
    pub encoder: Option<CharEncoder>,
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    pub fn dim(&self) -> usize {
        match (&self.encoder, &self.target) {
            (Some(enc), _) => enc.dims().word_dim,
            (None, Some(t)) => t.cols(),
            (None, None) => 0,
        }
    }

    /// Padded character ids, with unseen characters mapped to UNK.
    pub fn char_ids(&self, word: &str) -> Result<Vec<u32>> {
        self.chars
            .as_ref()
            .ok_or_else(|| Error::Unsupported {
                what: "character encoding",
                detail: format!("{} models have no character alphabet", self.kind()),
            })?
            .encode_lossy(word)
    }

    fn encoder(&self) -> Result<&CharEncoder> {
        self.encoder.as_ref().ok_or_else(|| Error::Unsupported {
            what: "character encoder",
            detail: format!("{} models have no character encoder", self.kind()),
        })
    }

    /// Vector for `word`. Word-level models return `None` for unseen words;
    /// character models embed any non-empty string.
    pub fn word_vector(&self, word: &str) -> Option<Vec<f64>> {
        match &self.encoder {
            Some(enc) => {
                let ids = self.char_ids(word).ok()?;
                enc.forward_pass(&ids).ok().map(|p| p.output().to_vec())
            }
            None => {
                let id = self.vocab.id(word)?;
                self.target.as_ref().map(|t| t.row(id as usize).to_vec())
            }
        }
    }

    pub fn encode_word(&self, word: &str) -> Result<EncoderStates> {
        self.encoder()?.encode(&self.char_ids(word)?)
    }

    /// Attention weights over the `n + 1` split positions and the word vector.
    pub fn attend_word(&self, word: &str) -> Result<AttentionResult> {
        let enc = self.encoder()?;
        enc.attend(&enc.encode(&self.char_ids(word)?)?)
    }

    /// Vectors for the whole vocabulary, row `i` for word id `i`.
    pub fn vocab_matrix(&self) -> Matrix {
        let dim = self.dim();
        match &self.encoder {
            Some(_) => {
                let rows: Vec<Vec<f64>> = self
                    .vocab
                    .words()
                    .par_iter()
                    .map(|w| self.word_vector(w).unwrap_or_else(|| vec![0.0; dim]))
                    .collect();
                Matrix::from_vec(rows.len(), dim, rows.concat()).expect("consistent dims")
            }
            None => self
                .target
                .clone()
                .unwrap_or_else(|| Matrix::zeros(self.vocab.len(), dim)),
        }
    }
}
