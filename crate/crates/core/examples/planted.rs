//! Trains Char2Vec on a planted-morphology corpus and reports boundary MAP.
//!
//! Usage: `planted [seed] [batch] [lr] [tokens] [epochs] [topic_prob] [stem_families]`

use std::time::Instant;

use char2vec::embedder::{train, ModelKind, TrainConfig};
use char2vec::morphology::{boundary_weights, expected_random_map, map_score};
use char2vec::numerics::AdamConfig;
use char2vec::synthetic::{generate, PlantedConfig};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() {
    let seed: u64 = arg(1, 0);
    let batch: usize = arg(2, 1024);
    let lr: f64 = arg(3, 1e-2);
    let tokens: usize = arg(4, 1_000_000);
    let epochs: usize = arg(5, 3);
    let topic_prob: f64 = arg(6, PlantedConfig::default().topic_prob);
    let stem_families: usize = arg(7, PlantedConfig::default().stem_families);
    let planted = generate(&PlantedConfig {
        tokens,
        seed,
        topic_prob,
        stem_families,
        ..PlantedConfig::default()
    });
    let config = TrainConfig {
        kind: ModelKind::Char2vec,
        char_dim: 16,
        lstm_dim: 32,
        word_dim: 32,
        epochs,
        batch_size: batch,
        adam: AdamConfig {
            lr,
            ..AdamConfig::default()
        },
        seed,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let out = train(&config, &planted.corpus, &mut ()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let model = out.model;
    let map = map_score(|w| boundary_weights(&model, w), &planted.lexicon).unwrap();
    let random = expected_random_map(&planted.lexicon).unwrap();
    for e in &out.trace.epochs {
        println!(
            "{:?} epoch {} loss {:.4}",
            e.stage,
            e.epoch + 1,
            e.mean_loss
        );
    }
    println!(
        "seed {seed} vocab {} time {secs:.1}s map {:.4} random {:.4} margin {:.4}",
        model.vocab.len(),
        map.all.map,
        random.all.map,
        map.all.map - random.all.map
    );
    for g in planted.lexicon.iter().step_by(17) {
        let r = boundary_weights(&model, &g.word).unwrap();
        let att = model.attend_word(&g.word).unwrap();
        let w: Vec<String> = att.weights.iter().map(|x| format!("{x:.2}")).collect();
        println!(
            "{:12} gold {:?} top {} weights {}",
            g.word,
            g.boundaries,
            r.top_split(),
            w.join(" ")
        );
    }
}
