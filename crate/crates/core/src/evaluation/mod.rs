//! Intrinsic evaluation: word similarity, analogies and nearest neighbours.

mod analogy;
mod neighbors;
mod similarity;

pub use analogy::{
    answer_analogy, default_section_kind, eval_analogy, load_analogies, load_sidecar,
    parse_analogies, parse_sidecar, AnalogyDataset, AnalogyQuestion, AnalogyReport, Section,
    SectionKind, SectionScore,
};
pub use neighbors::{nearest_neighbors, Neighbor};
pub use similarity::{
    eval_similarity, load_similarity, parse_similarity, SimilarityDataset, SimilarityPair,
    SimilarityReport,
};

use crate::corpus::Vocab;
use crate::embedder::Model;
use crate::error::{Error, Result};
use crate::numerics::{dot, norm, Matrix};

/// Anything that maps words to vectors over a trained vocabulary.
pub trait Embeddings: Sync {
    fn vocab(&self) -> &Vocab;
    /// Vector for any word the model can embed.
    fn vector(&self, word: &str) -> Option<Vec<f64>>;
    /// Row `i` holds the vector of word id `i`.
    fn vocab_matrix(&self) -> Matrix;
    /// Whether words outside the vocabulary still get vectors.
    fn embeds_unseen(&self) -> bool;
}

impl Embeddings for Model {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn vector(&self, word: &str) -> Option<Vec<f64>> {
        self.word_vector(word)
    }

    fn vocab_matrix(&self) -> Matrix {
        Model::vocab_matrix(self)
    }

    fn embeds_unseen(&self) -> bool {
        self.kind().is_char_model()
    }
}

/// A fixed table of word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticVectors {
    pub vocab: Vocab,
    pub table: Matrix,
}

impl StaticVectors {
    pub fn new(vocab: Vocab, table: Matrix) -> Result<Self> {
        if table.rows() != vocab.len() {
            return Err(Error::shape("vector table rows", vocab.len(), table.rows()));
        }
        Ok(StaticVectors { vocab, table })
    }
}

impl Embeddings for StaticVectors {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn vector(&self, word: &str) -> Option<Vec<f64>> {
        self.vocab
            .id(word)
            .map(|id| self.table.row(id as usize).to_vec())
    }

    fn vocab_matrix(&self) -> Matrix {
        self.table.clone()
    }

    fn embeds_unseen(&self) -> bool {
        false
    }
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::shape("cosine", u.len(), v.len()));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Data("cosine of a zero vector is undefined".into()));
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their mean rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = mean;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape("spearman", x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::Data("spearman needs at least two pairs".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("spearman input"));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let mean = (x.len() as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Data("spearman undefined: constant ranks".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Rows scaled to unit length; zero rows stay zero.
pub(crate) fn normalize_rows(mut m: Matrix) -> Matrix {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let n = norm(row);
        if n > 0.0 {
            row.iter_mut().for_each(|x| *x /= n);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[0.3, -2.0], &[0.3, -2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(cosine(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(cosine(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(),
            1.0
        );
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!((spearman(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(spearman(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn ties_share_ranks() {
        assert_eq!(
            average_ranks(&[5.0, 1.0, 5.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }
}
