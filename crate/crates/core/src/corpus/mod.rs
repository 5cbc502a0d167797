//! Corpus ingestion: tokenization, vocabulary, context pairs, noise sampling
//! and character alphabets.

mod chars;
mod noise;
mod pairs;
mod vocab;

use std::path::Path;

pub use chars::{CharVocab, BOW, EOW, UNK};
pub use noise::NoiseSampler;
pub use pairs::{count_pairs, iter_pairs, TrainingPair};
pub use vocab::Vocab;

use crate::error::{Error, Result};

/// Splits UTF-8 text on runs of whitespace. No other normalization.
pub fn tokenize(bytes: &[u8]) -> Result<Vec<&str>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    Ok(text.split_whitespace().collect())
}

/// A corpus held in memory as one string.
#[derive(Debug, Clone)]
pub struct Corpus {
    text: String,
}

impl Corpus {
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(bytes)
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        let text = String::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 {
            offset: e.utf8_error().valid_up_to(),
        })?;
        Ok(Corpus { text })
    }

    pub fn from_text(text: impl Into<String>) -> Self {
        Corpus { text: text.into() }
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.text.split_whitespace()
    }

    /// In-vocabulary token ids in corpus order; out-of-vocabulary tokens are
    /// dropped.
    pub fn encode(&self, vocab: &Vocab) -> Vec<u32> {
        self.tokens().filter_map(|t| vocab.id(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize(b"the cat sat").unwrap(), vec!["the", "cat", "sat"]);
        assert!(tokenize(b"").unwrap().is_empty());
        assert_eq!(tokenize(b"a  b").unwrap(), vec!["a", "b"]);
        assert_eq!(tokenize(b" a\tb\n\nc ").unwrap(), vec!["a", "b", "c"]);
    }

    #[test]
    fn tokenize_reports_offset() {
        let r = tokenize(b"abc \xff def");
        assert!(matches!(r, Err(Error::InvalidUtf8 { offset: 4 })));
        let r = Corpus::from_bytes(b"ok\xc3".to_vec());
        assert!(matches!(r, Err(Error::InvalidUtf8 { offset: 2 })));
    }

    #[test]
    fn encode_drops_oov() {
        let c = Corpus::from_text("a x b a");
        let v = Vocab::build(["a", "a", "b"], 1).unwrap();
        assert_eq!(c.encode(&v), vec![0, 1, 0]);
    }
}
