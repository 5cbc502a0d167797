use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Word ↔ id mapping with raw corpus counts.
///
/// Ids are dense and assigned by descending count, ties broken
/// lexicographically, so id 0 is always the most frequent word.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    total: u64,
}

impl Vocab {
    /// Keeps every word seen at least `min_count` times.
    pub fn build<'a, I>(tokens: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if min_count < 1 {
            return Err(Error::Config("min-count must be at least 1".into()));
        }
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for tok in tokens {
            *counts.entry(tok).or_default() += 1;
        }
        let mut kept: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyVocab { min_count });
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Ok(Self::from_counts(
            kept.into_iter().map(|(w, c)| (w.to_string(), c)),
        ))
    }

    /// Builds a vocabulary from `(word, count)` pairs, keeping the given order.
    pub fn from_counts<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (String, u64)>,
    {
        let (words, counts): (Vec<String>, Vec<u64>) = entries.into_iter().unzip();
        let mut v = Vocab {
            total: counts.iter().sum(),
            words,
            counts,
            index: HashMap::new(),
        };
        v.reindex();
        v
    }

    pub(crate) fn reindex(&mut self) {
        self.index = self
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Sum of counts over retained words.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Writes `word<TAB>count` lines in id order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (w, c) in self.words.iter().zip(&self.counts) {
            writeln!(out, "{w}\t{c}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(input: R, path: &std::path::Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: &str| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: msg.to_string(),
            };
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected word<TAB>count"))?;
            let count = count
                .trim()
                .parse::<u64>()
                .map_err(|_| parse_err("count is not an integer"))?;
            entries.push((word.to_string(), count));
        }
        let v = Self::from_counts(entries);
        if v.index.len() != v.len() {
            return Err(Error::Data(format!(
                "{}: duplicate words in vocabulary",
                path.display()
            )));
        }
        Ok(v)
    }
}
