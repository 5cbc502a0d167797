use super::analogy::NormalizedVocab;
use super::Embeddings;
use crate::error::{Error, Result};
use crate::numerics::dot;

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub word: String,
    pub cosine: f64,
    pub count: u64,
}

/// The `k` vocabulary words closest in cosine to `word`, excluding `word`
/// itself and, with `min_freq`, words seen fewer times. Ties keep the lower
/// id first. Fewer than `k` are returned when the filter leaves fewer.
pub fn nearest_neighbors<E: Embeddings + ?Sized>(
    model: &E,
    word: &str,
    k: usize,
    min_freq: Option<u64>,
) -> Result<Vec<Neighbor>> {
    let index = NormalizedVocab::new(model);
    let query = index
        .unit_vector(word)
        .ok_or_else(|| Error::Data(format!("no vector for {word:?}")))?;
    let vocab = model.vocab();
    let min = min_freq.unwrap_or(0);
    let mut scored: Vec<(u32, f64)> = (0..vocab.len() as u32)
        .filter(|&id| vocab.word(id) != word && vocab.count(id) >= min)
        .map(|id| {
            (
                id,
                dot(index.unit.row(id as usize), &query).clamp(-1.0, 1.0),
            )
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(id, cosine)| Neighbor {
            word: vocab.word(id).to_string(),
            cosine,
            count: vocab.count(id),
        })
        .collect())
}
