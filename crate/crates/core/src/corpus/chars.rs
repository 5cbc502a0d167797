use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

/// Begin-of-word symbol id (rendered `^`).
pub const BOW: u32 = 0;
/// End-of-word symbol id (rendered `$`).
pub const EOW: u32 = 1;
/// Stand-in for characters never seen in training.
pub const UNK: u32 = 2;
const RESERVED: usize = 3;

/// Character alphabet. Reserved symbols occupy ids 0..3 and are not
/// characters, so they never collide with corpus text; observed characters
/// follow in code point order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharVocab {
    chars: Vec<char>,
    index: HashMap<char, u32>,
}

impl CharVocab {
    pub fn from_words<'a, I>(words: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let set: BTreeSet<char> = words.into_iter().flat_map(str::chars).collect();
        Self::from_chars(set.into_iter().collect())
    }

    pub fn from_chars(chars: Vec<char>) -> Self {
        let index = chars
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, (i + RESERVED) as u32))
            .collect();
        CharVocab { chars, index }
    }

    /// Total number of ids including reserved symbols.
    pub fn len(&self) -> usize {
        self.chars.len() + RESERVED
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn id(&self, c: char) -> Option<u32> {
        self.index.get(&c).copied()
    }

    /// Renders an id for display.
    pub fn symbol(&self, id: u32) -> char {
        match id {
            BOW => '^',
            EOW => '$',
            UNK => '\u{fffd}',
            _ => self.chars[id as usize - RESERVED],
        }
    }

    /// `[BOW, c_1, …, c_n, EOW]`; unknown characters are an error.
    pub fn encode(&self, word: &str) -> Result<Vec<u32>> {
        if word.is_empty() {
            return Err(Error::EmptyWord);
        }
        let mut ids = Vec::with_capacity(word.len() + 2);
        ids.push(BOW);
        for c in word.chars() {
            let id = self.id(c).ok_or_else(|| Error::UnknownChar {
                ch: c,
                word: word.to_string(),
            })?;
            ids.push(id);
        }
        ids.push(EOW);
        Ok(ids)
    }

    /// Like [`encode`](Self::encode) but maps unknown characters to [`UNK`].
    pub fn encode_lossy(&self, word: &str) -> Result<Vec<u32>> {
        if word.is_empty() {
            return Err(Error::EmptyWord);
        }
        let mut ids = Vec::with_capacity(word.len() + 2);
        ids.push(BOW);
        ids.extend(word.chars().map(|c| self.id(c).unwrap_or(UNK)));
        ids.push(EOW);
        Ok(ids)
    }
}
