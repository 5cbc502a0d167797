//! Synthetic corpora with planted morphology.
//!
//! Every target word is a stem followed by a suffix. Its neighbours are drawn
//! from topic words owned by the stem and marker words owned by the suffix, so
//! the stem carries the topical half of a word's contexts and the suffix the
//! rest. By default stems come in families that differ only in their last
//! letter, so no proper prefix of a stem identifies it. The true stem-suffix
//! boundary is known for every word.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::morphology::GoldSegmentation;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub stems: usize,
    pub suffixes: usize,
    /// Approximate corpus length in tokens.
    pub tokens: usize,
    pub topic_words_per_stem: usize,
    pub markers_per_suffix: usize,
    /// Context words on each side of a planted word.
    pub half_width: usize,
    /// Chance that a context slot holds a topic word rather than a marker.
    pub topic_prob: f64,
    /// When non-zero, stems come in this many families that share every
    /// letter but the last.
    pub stem_families: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            stems: 30,
            suffixes: 5,
            tokens: 1_000_000,
            topic_words_per_stem: 6,
            markers_per_suffix: 3,
            half_width: 3,
            topic_prob: 0.5,
            stem_families: 6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub corpus: Corpus,
    pub stems: Vec<String>,
    pub suffixes: Vec<String>,
    /// One entry per stem-suffix word, boundary at the end of the stem.
    pub lexicon: Vec<GoldSegmentation>,
}

const CONSONANTS: &[u8] = b"bcdfghklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Alternating consonant-vowel string of `len` letters.
fn pseudo_word(rng: &mut impl Rng, len: usize) -> String {
    let start_with_vowel = rng.gen_bool(0.3);
    (0..len)
        .map(|i| {
            let pool = if (i % 2 == 0) != start_with_vowel {
                CONSONANTS
            } else {
                VOWELS
            };
            *pool.choose(rng).unwrap() as char
        })
        .collect()
}

/// `count` distinct pseudo-words with lengths in `lens`, avoiding `taken`.
fn distinct_words(
    rng: &mut impl Rng,
    count: usize,
    lens: std::ops::RangeInclusive<usize>,
    taken: &mut std::collections::HashSet<String>,
) -> Vec<String> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let len = rng.gen_range(lens.clone());
        let w = pseudo_word(rng, len);
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// `count` stems built as a shared root of 3 to 5 letters plus one letter
/// that differs within the family.
fn family_stems(
    rng: &mut impl Rng,
    count: usize,
    families: usize,
    taken: &mut std::collections::HashSet<String>,
) -> Vec<String> {
    let per_family = count.div_ceil(families);
    let letters: Vec<u8> = CONSONANTS.iter().chain(VOWELS).copied().collect();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let len = rng.gen_range(3..=5);
        let root = pseudo_word(rng, len);
        if taken.iter().any(|t| t.starts_with(&root)) {
            continue;
        }
        let want = per_family.min(count - out.len());
        for &c in letters.choose_multiple(rng, want) {
            let stem = format!("{root}{}", c as char);
            taken.insert(stem.clone());
            out.push(stem);
        }
    }
    out
}

pub fn generate(config: &PlantedConfig) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut taken = std::collections::HashSet::new();
    // Planted words have at least 6 letters; every other word has at most 5,
    // so no context word can collide with a planted one.
    let suffixes = distinct_words(&mut rng, config.suffixes, 2..=3, &mut taken);
    let stems = if config.stem_families == 0 {
        distinct_words(&mut rng, config.stems, 4..=6, &mut taken)
    } else {
        family_stems(&mut rng, config.stems, config.stem_families, &mut taken)
    };
    let topics: Vec<Vec<String>> = (0..config.stems)
        .map(|_| distinct_words(&mut rng, config.topic_words_per_stem, 3..=5, &mut taken))
        .collect();
    let markers: Vec<Vec<String>> = (0..config.suffixes)
        .map(|_| distinct_words(&mut rng, config.markers_per_suffix, 2..=4, &mut taken))
        .collect();

    let mut lexicon = Vec::with_capacity(stems.len() * suffixes.len());
    for stem in &stems {
        for suffix in &suffixes {
            lexicon.push(
                GoldSegmentation::from_segments(&[stem, suffix]).expect("non-empty segments"),
            );
        }
    }

    let span = 2 * config.half_width + 1;
    let mut text = String::with_capacity(config.tokens * 6);
    let mut emitted = 0;
    while emitted < config.tokens {
        let s = rng.gen_range(0..stems.len());
        let x = rng.gen_range(0..suffixes.len());
        for slot in 0..span {
            let word: &str = if slot == config.half_width {
                text.push_str(&stems[s]);
                &suffixes[x]
            } else if rng.gen_bool(config.topic_prob) {
                topics[s].choose(&mut rng).unwrap()
            } else {
                markers[x].choose(&mut rng).unwrap()
            };
            text.push_str(word);
            text.push(' ');
        }
        emitted += span;
    }
    PlantedCorpus {
        corpus: Corpus::from_text(text),
        stems,
        suffixes,
        lexicon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_words_and_boundaries() {
        let config = PlantedConfig {
            tokens: 7_000,
            ..PlantedConfig::default()
        };
        let planted = generate(&config);
        assert_eq!(planted.lexicon.len(), 150);
        assert_eq!(planted.corpus.tokens().count(), 7_000);
        for g in &planted.lexicon {
            assert_eq!(g.boundaries.len(), 1);
            let b = *g.boundaries.iter().next().unwrap();
            assert!(planted
                .stems
                .iter()
                .any(|s| s.len() == b && g.word.starts_with(s.as_str())));
        }
        let tokens: Vec<&str> = planted.corpus.tokens().collect();
        assert!(planted.lexicon.iter().any(|g| g.word == tokens[3]));
        assert_eq!(
            generate(&config).corpus.tokens().collect::<Vec<_>>(),
            tokens
        );
    }
}
