//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::HashSet;

use char2vec::corpus::Vocab;
use char2vec::embedder::{pair_loss, CharEncoder, EncoderDims};
use char2vec::evaluation::{AnalogyDataset, AnalogyQuestion, Section, SectionKind, StaticVectors};
use char2vec::morphology::{BoundaryRanking, GoldSegmentation};
use char2vec::numerics::{grad_check_tensor, GradCheck, Matrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GRAD_EPS: f64 = 1e-5;

/// Analytic versus central-difference gradient of the full pair loss, per
/// encoder tensor, for one random instance with
/// `d_C = 4`, `d_LSTM = 8`, `d_word = 8`, `k = 3`, and a word of 2 to 6 chars.
pub fn encoder_grad_errors(seed: u64, attention: bool) -> Vec<(&'static str, GradCheck)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = EncoderDims {
        chars: 10,
        char_dim: 4,
        lstm_dim: 8,
        word_dim: 8,
        attn_dim: 8,
    };
    let mut enc = CharEncoder::init(dims, attention, &mut rng);
    // Spread the weights so every gate and the attention are far from their
    // near-linear regime at initialization.
    for t in enc.tensors_mut() {
        for x in t.iter_mut() {
            *x += rng.gen_range(-0.5..0.5);
        }
    }
    let n = rng.gen_range(2..=6);
    let mut ids = vec![0u32];
    ids.extend((0..n).map(|_| rng.gen_range(3..dims.chars as u32)));
    ids.push(1);
    let contexts = Matrix::from_fn(12, dims.word_dim, |_, _| rng.gen_range(-1.0..1.0));
    let ctx = rng.gen_range(0..12);
    let negs: Vec<u32> = (0..3).map(|_| rng.gen_range(0..12)).collect();

    let loss_of = |e: &CharEncoder| {
        let pass = e.forward_pass(&ids).unwrap();
        pair_loss(pass.output(), ctx, &negs, &contexts, false)
            .unwrap()
            .loss
    };

    let pass = enc.forward_pass(&ids).unwrap();
    let grad_f = pair_loss(pass.output(), ctx, &negs, &contexts, false)
        .unwrap()
        .grad_word;
    let mut grads = enc.zeros_like();
    enc.backward(&pass, &grad_f, &mut grads);

    let names = enc.tensor_names();
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
    let mut out = Vec::new();
    for (t, name) in names.into_iter().enumerate() {
        let mut params = enc.tensors()[t].to_vec();
        let err = grad_check_tensor(
            |p| {
                let mut e = enc.clone();
                e.tensors_mut()[t].copy_from_slice(p);
                loss_of(&e)
            },
            &mut params,
            &analytic[t],
            GRAD_EPS,
        )
        .unwrap();
        out.push((name, err));
    }
    out
}

/// Average precision from first principles: walk the ranked list and average
/// precision-at-hit over the gold items.
pub fn brute_force_ap(ranked: &[usize], gold: &[usize]) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, p) in ranked.iter().enumerate() {
        if gold.contains(p) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / gold.len() as f64
}

pub fn vectors(words: &[String], rows: Vec<Vec<f64>>) -> StaticVectors {
    let vocab = Vocab::from_counts(words.iter().cloned().map(|w| (w, 10)));
    let dim = rows[0].len();
    StaticVectors::new(
        vocab,
        Matrix::from_vec(rows.len(), dim, rows.concat()).unwrap(),
    )
    .unwrap()
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// One-hot basis words plus, for each question, an answer word whose vector is
/// exactly `e_b − e_a + e_c`.
pub fn orthonormal_analogies(
    n_basis: usize,
    n_questions: usize,
    seed: u64,
) -> (StaticVectors, AnalogyDataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words: Vec<String> = (0..n_basis).map(|i| format!("b{i}")).collect();
    let mut rows: Vec<Vec<f64>> = (0..n_basis)
        .map(|i| (0..n_basis).map(|j| (i == j) as u8 as f64).collect())
        .collect();
    let mut questions = Vec::new();
    let mut used = HashSet::new();
    while questions.len() < n_questions {
        let idx: Vec<usize> = (0..n_basis)
            .collect::<Vec<_>>()
            .choose_multiple(&mut rng, 3)
            .copied()
            .collect();
        if !used.insert(idx.clone()) {
            continue;
        }
        let (a, b, c) = (idx[0], idx[1], idx[2]);
        let mut v = vec![0.0; n_basis];
        v[b] += 1.0;
        v[a] -= 1.0;
        v[c] += 1.0;
        let d = format!("d{}", questions.len());
        words.push(d.clone());
        rows.push(v);
        questions.push(AnalogyQuestion {
            a: words[a].clone(),
            b: words[b].clone(),
            c: words[c].clone(),
            d,
            section: questions.len() % 2,
        });
    }
    let sections = vec![
        Section {
            name: "family".into(),
            kind: SectionKind::Semantic,
        },
        Section {
            name: "gram1".into(),
            kind: SectionKind::Syntactic,
        },
    ];
    (
        vectors(&words, rows),
        AnalogyDataset {
            sections,
            questions,
        },
    )
}

pub fn word_of_len(n: usize) -> String {
    (0..n).map(|i| (b'a' + (i % 26) as u8) as char).collect()
}

/// A random ranking over `b` boundaries and a random non-empty gold set.
pub fn random_instance(rng: &mut impl Rng, max_b: usize) -> (BoundaryRanking, GoldSegmentation) {
    let b = rng.gen_range(1..=max_b);
    let word = word_of_len(b + 1);
    let mut order: Vec<usize> = (1..=b).collect();
    order.shuffle(rng);
    let g = rng.gen_range(1..=b);
    let mut pool: Vec<usize> = (1..=b).collect();
    pool.shuffle(rng);
    let gold = GoldSegmentation {
        word: word.clone(),
        boundaries: pool[..g].iter().copied().collect(),
    };
    (BoundaryRanking::from_order(&word, &order), gold)
}
