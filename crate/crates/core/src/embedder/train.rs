//! Two-stage training.
//!
//! Stage one trains word-level SGNS tables on the corpus. For the character
//! models, stage two keeps the stage-one context table (frozen by default)
//! and fits the character encoder with Adam under the same negative-sampling
//! objective, so that `f(w)` replaces the target row of `w`.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::encoder::CharEncoder;
use super::objective::accumulate_pair_loss;
use super::{persist, ppmi, sgns, Model, ModelKind, TrainConfig};
use crate::corpus::{CharVocab, Corpus, NoiseSampler, Vocab};
use crate::error::{Error, Result};
use crate::numerics::{AdamState, Matrix};

const CHAR_STAGE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Sgns,
    Char,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Sgns => "sgns",
            Stage::Char => "char",
        }
    }
}

/// Running loss sum over a span of pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct TraceWindow {
    pub epoch: usize,
    pub pairs: u64,
    pub loss: f64,
}

impl TraceWindow {
    pub fn add(&mut self, loss: f64) {
        self.pairs += 1;
        self.loss += loss;
    }

    pub fn add_many(&mut self, pairs: u64, loss: f64) {
        self.pairs += pairs;
        self.loss += loss;
    }

    pub fn merge(&mut self, other: &TraceWindow) {
        self.pairs += other.pairs;
        self.loss += other.loss;
    }

    fn mean(&self) -> f64 {
        if self.pairs == 0 {
            0.0
        } else {
            self.loss / self.pairs as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossPoint {
    pub stage: Stage,
    pub epoch: usize,
    /// Pairs processed in this stage up to the end of the window.
    pub pairs: u64,
    pub mean_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLoss {
    pub stage: Stage,
    pub epoch: usize,
    pub pairs: u64,
    pub mean_loss: f64,
}

/// Mean loss per fixed number of pairs, plus per-epoch means.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossTrace {
    pub points: Vec<LossPoint>,
    pub epochs: Vec<EpochLoss>,
}

impl LossTrace {
    pub(crate) fn push_window(&mut self, stage: Stage, w: &TraceWindow) {
        let before = self
            .points
            .iter()
            .rev()
            .find(|p| p.stage == stage)
            .map_or(0, |p| p.pairs);
        self.points.push(LossPoint {
            stage,
            epoch: w.epoch,
            pairs: before + w.pairs,
            mean_loss: w.mean(),
        });
    }

    pub(crate) fn push_epoch(&mut self, stage: Stage, w: &TraceWindow) {
        self.epochs.push(EpochLoss {
            stage,
            epoch: w.epoch,
            pairs: w.pairs,
            mean_loss: w.mean(),
        });
    }

    pub fn epoch_means(&self, stage: Stage) -> Vec<f64> {
        self.epochs
            .iter()
            .filter(|e| e.stage == stage)
            .map(|e| e.mean_loss)
            .collect()
    }

    /// TSV with header `stage\tepoch\tpairs\tmean_loss`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "stage\tepoch\tpairs\tmean_loss")?;
        for p in &self.points {
            writeln!(
                out,
                "{}\t{}\t{}\t{:.6}",
                p.stage.name(),
                p.epoch + 1,
                p.pairs,
                p.mean_loss
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: Model,
    pub trace: LossTrace,
}

/// Progress callbacks for long runs.
pub trait Progress {
    fn stage_started(&mut self, _stage: Stage, _pairs_per_epoch: u64) {}
    fn epoch_finished(&mut self, _stage: Stage, _epoch: usize, _mean_loss: f64) {}
}

impl Progress for () {}

pub fn train_file(config: &TrainConfig, path: &Path) -> Result<TrainOutput> {
    train(config, &Corpus::read(path)?, &mut ())
}

pub fn train(
    config: &TrainConfig,
    corpus: &Corpus,
    progress: &mut dyn Progress,
) -> Result<TrainOutput> {
    config.validate()?;
    let vocab = Vocab::build(corpus.tokens(), config.min_count)?;
    let ids = corpus.encode(&vocab);
    train_ids(config, vocab, &ids, progress)
}

/// Training on an already encoded corpus.
pub fn train_ids(
    config: &TrainConfig,
    vocab: Vocab,
    ids: &[u32],
    progress: &mut dyn Progress,
) -> Result<TrainOutput> {
    config.validate()?;
    let mut trace = LossTrace::default();
    if config.kind == ModelKind::PpmiSvd {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let table = ppmi::ppmi_svd(ids, vocab.len(), config.window, config.word_dim, &mut rng)?;
        let model = Model {
            config: config.clone(),
            vocab,
            target: Some(table),
            context: None,
            context_frozen: false,
            chars: None,
            encoder: None,
        };
        return Ok(TrainOutput { model, trace });
    }

    let noise = NoiseSampler::new(&vocab, config.noise_exponent)?;
    let pairs_per_epoch = crate::corpus::count_pairs(ids.len(), config.window);
    progress.stage_started(Stage::Sgns, pairs_per_epoch);
    let tables = sgns::train_sgns(ids, vocab.len(), &noise, config, &mut trace)?;
    for e in trace.epochs.iter().filter(|e| e.stage == Stage::Sgns) {
        progress.epoch_finished(Stage::Sgns, e.epoch, e.mean_loss);
    }

    let mut model = Model {
        config: config.clone(),
        vocab,
        target: Some(tables.target),
        context: Some(tables.context),
        context_frozen: false,
        chars: None,
        encoder: None,
    };
    if !config.kind.is_char_model() {
        return Ok(TrainOutput { model, trace });
    }

    let chars = CharVocab::from_words(model.vocab.words().iter().map(String::as_str));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ CHAR_STAGE_SALT);
    let encoder = CharEncoder::init(
        config.encoder_dims(chars.len()),
        config.kind == ModelKind::Char2vec,
        &mut rng,
    );
    model.target = None;
    model.chars = Some(chars);
    model.encoder = Some(encoder);
    model.context_frozen = config.freeze_context;

    progress.stage_started(Stage::Char, pairs_per_epoch);
    let result = CharTrainer::new(&mut model, &noise, rng)?.run(ids, &mut trace, progress);
    if let Err(err) = result {
        if let (Error::Diverged { .. }, Some(path)) = (&err, &config.nan_dump) {
            if let Err(dump_err) = persist::save_model(&model, path) {
                log::error!("failed to write divergence dump: {dump_err}");
            }
        }
        return Err(err);
    }
    Ok(TrainOutput { model, trace })
}

/// Character-stage state: optimizer moments plus reusable gradient buffers.
struct CharTrainer<'a> {
    model: &'a mut Model,
    noise: &'a NoiseSampler,
    rng: ChaCha8Rng,
    word_chars: Vec<Vec<u32>>,
    adam: Vec<AdamState>,
    /// One gradient buffer per worker chunk.
    grads: Vec<CharEncoder>,
    pool: Option<rayon::ThreadPool>,
    context_lr: f64,
}

struct WordBatch {
    word: u32,
    /// `(context, negatives)` per observed pair.
    pairs: Vec<(u32, Vec<u32>)>,
}

struct ChunkResult {
    loss: f64,
    pairs: u64,
    bad_word: Option<u32>,
    context_grads: Vec<(u32, Vec<f64>)>,
}

impl<'a> CharTrainer<'a> {
    fn new(model: &'a mut Model, noise: &'a NoiseSampler, rng: ChaCha8Rng) -> Result<Self> {
        let chars = model.chars.as_ref().expect("char model");
        let word_chars = model
            .vocab
            .words()
            .iter()
            .map(|w| chars.encode(w))
            .collect::<Result<Vec<_>>>()?;
        let encoder = model.encoder.as_ref().expect("char model");
        let adam = encoder
            .tensors()
            .iter()
            .map(|t| AdamState::new(model.config.adam, t.len()))
            .collect();
        let workers = model.config.workers;
        let grads = (0..workers).map(|_| encoder.zeros_like()).collect();
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        let context_lr = model.config.sgns_lr;
        Ok(CharTrainer {
            model,
            noise,
            rng,
            word_chars,
            adam,
            grads,
            pool,
            context_lr,
        })
    }

    fn run(
        mut self,
        ids: &[u32],
        trace: &mut LossTrace,
        progress: &mut dyn Progress,
    ) -> Result<()> {
        let config = self.model.config.clone();
        let mut order: Vec<usize> = (0..ids.len()).collect();
        let mut window = TraceWindow::default();
        let total_batches = (config.epochs * ids.len().div_ceil(config.batch_size)) as f64;
        let mut batch_index = 0usize;
        let mut stage_pairs = 0u64;

        for epoch in 0..config.epochs {
            order.shuffle(&mut self.rng);
            let mut epoch_acc = TraceWindow {
                epoch,
                ..Default::default()
            };
            for batch in order.chunks(config.batch_size) {
                let words = self.gather(batch, ids, config.window, config.negatives);
                let progress_frac = batch_index as f64 / total_batches;
                batch_index += 1;
                let (loss, pairs) = self.step(&words, progress_frac, stage_pairs)?;
                if !loss.is_finite() {
                    return Err(Error::Diverged {
                        stage: Stage::Char.name(),
                        pairs: stage_pairs,
                        word: String::new(),
                    });
                }
                stage_pairs += pairs;
                window.add_many(pairs, loss);
                epoch_acc.add_many(pairs, loss);
                if window.pairs >= config.trace_every {
                    window.epoch = epoch;
                    trace.push_window(Stage::Char, &window);
                    window = TraceWindow::default();
                }
            }
            trace.push_epoch(Stage::Char, &epoch_acc);
            progress.epoch_finished(Stage::Char, epoch, epoch_acc.mean());
        }
        if window.pairs > 0 {
            window.epoch = config.epochs - 1;
            trace.push_window(Stage::Char, &window);
        }
        Ok(())
    }

    /// Collects the batch's pairs grouped by target word, in first-seen order,
    /// drawing negatives sequentially from the stage RNG.
    fn gather(&mut self, batch: &[usize], ids: &[u32], window: usize, k: usize) -> Vec<WordBatch> {
        let mut slots: HashMap<u32, usize> = HashMap::new();
        let mut words: Vec<WordBatch> = Vec::new();
        for &t in batch {
            let word = ids[t];
            let slot = *slots.entry(word).or_insert_with(|| {
                words.push(WordBatch {
                    word,
                    pairs: Vec::new(),
                });
                words.len() - 1
            });
            let lo = t.saturating_sub(window);
            let hi = (t + window + 1).min(ids.len());
            for j in (lo..hi).filter(|&j| j != t) {
                let negs = self.noise.sample_negatives(&mut self.rng, k);
                words[slot].pairs.push((ids[j], negs));
            }
        }
        words
    }

    /// One optimizer step over a gathered batch. Returns (summed loss, pairs).
    fn step(
        &mut self,
        words: &[WordBatch],
        progress_frac: f64,
        pairs_before: u64,
    ) -> Result<(f64, u64)> {
        let total_pairs: usize = words.iter().map(|w| w.pairs.len()).sum();
        if total_pairs == 0 {
            return Ok((0.0, 0));
        }
        let encoder = self.model.encoder.as_ref().expect("char model");
        let contexts = self.model.context.as_ref().expect("context table");
        let trainable_context = !self.model.context_frozen;
        let word_chars = &self.word_chars;
        let chunk_len = words.len().div_ceil(self.grads.len()).max(1);
        let chunks: Vec<&[WordBatch]> = words.chunks(chunk_len).collect();

        let work = |(chunk, grads): (&[WordBatch], &mut CharEncoder)| -> Result<ChunkResult> {
            grads.fill_zero();
            let mut res = ChunkResult {
                loss: 0.0,
                pairs: 0,
                bad_word: None,
                context_grads: Vec::new(),
            };
            for wb in chunk {
                let pass = encoder.forward_pass(&word_chars[wb.word as usize])?;
                let f = pass.output();
                let mut grad_f = vec![0.0; f.len()];
                let mut word_loss = 0.0;
                for (ctx, negs) in &wb.pairs {
                    word_loss += accumulate_pair_loss(f, *ctx, negs, contexts, &mut grad_f);
                    if trainable_context {
                        let r = super::objective::pair_loss(f, *ctx, negs, contexts, true)?;
                        res.context_grads.extend(r.grad_contexts);
                    }
                }
                if !word_loss.is_finite() && res.bad_word.is_none() {
                    res.bad_word = Some(wb.word);
                }
                res.loss += word_loss;
                res.pairs += wb.pairs.len() as u64;
                encoder.backward(&pass, &grad_f, grads);
            }
            Ok(res)
        };

        let n_chunks = chunks.len();
        let results: Vec<Result<ChunkResult>> = match &self.pool {
            Some(pool) => pool.install(|| {
                chunks
                    .into_par_iter()
                    .zip(self.grads[..n_chunks].par_iter_mut())
                    .map(work)
                    .collect()
            }),
            None => chunks
                .into_iter()
                .zip(self.grads[..n_chunks].iter_mut())
                .map(work)
                .collect(),
        };
        let results = results.into_iter().collect::<Result<Vec<_>>>()?;

        let (head, rest) = self.grads.split_at_mut(1);
        let total = &mut head[0];
        for g in &rest[..n_chunks - 1] {
            total.add_assign(g);
        }
        total.scale(1.0 / total_pairs as f64);

        let loss: f64 = results.iter().map(|r| r.loss).sum();
        if let Some(bad) = results.iter().find_map(|r| r.bad_word) {
            return Err(Error::Diverged {
                stage: Stage::Char.name(),
                pairs: pairs_before,
                word: self.model.vocab.word(bad).to_string(),
            });
        }

        let encoder = self.model.encoder.as_mut().expect("char model");
        for ((param, grad), state) in encoder
            .tensors_mut()
            .into_iter()
            .zip(total.tensors())
            .zip(self.adam.iter_mut())
        {
            state.update(param, grad)?;
        }

        if trainable_context {
            let lr = self.context_lr * (1.0 - progress_frac).max(1e-4);
            let contexts: &mut Matrix = self.model.context.as_mut().expect("context table");
            for r in &results {
                for (row, g) in &r.context_grads {
                    crate::numerics::axpy(-lr, g, contexts.row_mut(*row as usize));
                }
            }
        }
        Ok((loss, total_pairs as u64))
    }
}
