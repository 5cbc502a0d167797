//! Word-level skip-gram with negative sampling, trained by SGD with a
//! linearly decaying step. With several workers the corpus is split into
//! contiguous shards and the two tables are updated lock-free.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::train::{LossTrace, Stage, TraceWindow};
use super::TrainConfig;
use crate::corpus::NoiseSampler;
use crate::error::{Error, Result};
use crate::numerics::activations::{log_sigmoid, sigmoid};
use crate::numerics::Matrix;

const MIN_LR_FRACTION: f64 = 1e-4;

/// Row-major table of `f64` stored as relaxed atomics so that workers may
/// update rows concurrently.
struct SharedTable {
    cols: usize,
    data: Vec<AtomicU64>,
}

impl SharedTable {
    fn from_matrix(m: &Matrix) -> Self {
        SharedTable {
            cols: m.cols(),
            data: m
                .as_slice()
                .iter()
                .map(|x| AtomicU64::new(x.to_bits()))
                .collect(),
        }
    }

    fn into_matrix(self) -> Matrix {
        let rows = self.data.len() / self.cols;
        let data = self
            .data
            .into_iter()
            .map(|a| f64::from_bits(a.into_inner()))
            .collect();
        Matrix::from_vec(rows, self.cols, data).expect("table shape")
    }

    fn load_row(&self, row: u32, out: &mut [f64]) {
        let start = row as usize * self.cols;
        for (o, a) in out.iter_mut().zip(&self.data[start..start + self.cols]) {
            *o = f64::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn add_to_row(&self, row: u32, alpha: f64, x: &[f64]) {
        let start = row as usize * self.cols;
        for (a, xi) in self.data[start..start + self.cols].iter().zip(x) {
            let cur = f64::from_bits(a.load(Ordering::Relaxed));
            a.store((cur + alpha * xi).to_bits(), Ordering::Relaxed);
        }
    }
}

pub(crate) struct SgnsTables {
    pub target: Matrix,
    pub context: Matrix,
}

/// Target rows uniform in `±0.5/d`, context rows zero.
pub(crate) fn init_tables(vocab_len: usize, dim: usize, rng: &mut impl Rng) -> SgnsTables {
    let bound = 0.5 / dim as f64;
    SgnsTables {
        target: Matrix::from_fn(vocab_len, dim, |_, _| rng.gen_range(-bound..bound)),
        context: Matrix::zeros(vocab_len, dim),
    }
}

/// Trains both tables on the id sequence for `config.epochs` passes.
pub(crate) fn train_sgns(
    ids: &[u32],
    vocab_len: usize,
    noise: &NoiseSampler,
    config: &TrainConfig,
    trace: &mut LossTrace,
) -> Result<SgnsTables> {
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let tables = init_tables(vocab_len, config.word_dim, &mut init_rng);
    let target = SharedTable::from_matrix(&tables.target);
    let context = SharedTable::from_matrix(&tables.context);

    let workers = config.workers.min(ids.len().max(1));
    let shard_len = ids.len().div_ceil(workers).max(1);
    let shards: Vec<(usize, &[u32])> = ids.chunks(shard_len).enumerate().collect();
    let window_size = (config.trace_every / workers as u64).max(1);

    let results: Vec<Result<WorkerLog>> = if shards.len() <= 1 {
        shards
            .iter()
            .map(|&(w, shard)| run_worker(w, shard, &target, &context, noise, config, window_size))
            .collect()
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = shards
                .iter()
                .map(|&(w, shard)| {
                    let (target, context) = (&target, &context);
                    scope.spawn(move || {
                        run_worker(w, shard, target, context, noise, config, window_size)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sgns worker panicked"))
                .collect()
        })
    };
    let logs = results.into_iter().collect::<Result<Vec<_>>>()?;
    merge_logs(&logs, config.epochs, trace);

    Ok(SgnsTables {
        target: target.into_matrix(),
        context: context.into_matrix(),
    })
}

#[derive(Default)]
struct WorkerLog {
    windows: Vec<TraceWindow>,
    epochs: Vec<TraceWindow>,
}

fn run_worker(
    worker: usize,
    ids: &[u32],
    target: &SharedTable,
    context: &SharedTable,
    noise: &NoiseSampler,
    config: &TrainConfig,
    window_size: u64,
) -> Result<WorkerLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(worker as u64));
    let dim = target.cols;
    let mut w = vec![0.0; dim];
    let mut c = vec![0.0; dim];
    let mut grad_w = vec![0.0; dim];
    let mut negs = Vec::with_capacity(config.negatives);
    let mut log = WorkerLog::default();
    let mut window = TraceWindow::default();

    let total_steps = (config.epochs * ids.len()) as f64 + 1.0;
    let mut step = 0usize;
    let win = config.window;

    for epoch in 0..config.epochs {
        let mut epoch_acc = TraceWindow::default();
        for (t, &tgt) in ids.iter().enumerate() {
            let lr = config.sgns_lr * (1.0 - step as f64 / total_steps).max(MIN_LR_FRACTION);
            step += 1;
            let lo = t.saturating_sub(win);
            let hi = (t + win + 1).min(ids.len());
            for j in lo..hi {
                if j == t {
                    continue;
                }
                target.load_row(tgt, &mut w);
                grad_w.fill(0.0);
                noise.fill_negatives(&mut rng, config.negatives, &mut negs);
                let mut loss = 0.0;
                for (row, label) in
                    std::iter::once((ids[j], 1.0)).chain(negs.iter().map(|&n| (n, -1.0)))
                {
                    context.load_row(row, &mut c);
                    let score = crate::numerics::dot(&w, &c);
                    loss -= log_sigmoid(label * score);
                    // Ascent step on log σ(label·score).
                    let g = lr * label * sigmoid(-label * score);
                    crate::numerics::axpy(g, &c, &mut grad_w);
                    context.add_to_row(row, g, &w);
                }
                target.add_to_row(tgt, 1.0, &grad_w);
                if !loss.is_finite() {
                    return Err(Error::Diverged {
                        stage: Stage::Sgns.name(),
                        pairs: window.pairs + epoch_acc.pairs,
                        word: format!("id {tgt}"),
                    });
                }
                window.add(loss);
                epoch_acc.add(loss);
                if window.pairs >= window_size {
                    window.epoch = epoch;
                    log.windows.push(std::mem::take(&mut window));
                }
            }
        }
        epoch_acc.epoch = epoch;
        log.epochs.push(epoch_acc);
    }
    if window.pairs > 0 {
        window.epoch = config.epochs - 1;
        log.windows.push(window);
    }
    Ok(log)
}

fn merge_logs(logs: &[WorkerLog], epochs: usize, trace: &mut LossTrace) {
    let longest = logs.iter().map(|l| l.windows.len()).max().unwrap_or(0);
    for k in 0..longest {
        let mut merged = TraceWindow::default();
        for w in logs.iter().filter_map(|l| l.windows.get(k)) {
            merged.merge(w);
            merged.epoch = merged.epoch.max(w.epoch);
        }
        trace.push_window(Stage::Sgns, &merged);
    }
    for e in 0..epochs {
        let mut merged = TraceWindow::default();
        for w in logs.iter().filter_map(|l| l.epochs.get(e)) {
            merged.merge(w);
        }
        merged.epoch = e;
        trace.push_epoch(Stage::Sgns, &merged);
    }
}
