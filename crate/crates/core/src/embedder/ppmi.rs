//! Count-based vectors: PPMI-weighted co-occurrences factorized by truncated
//! SVD, with word vectors `U_k · Σ_k^{1/2}`.

use std::collections::BTreeMap;

use rand::Rng;

use crate::corpus::iter_pairs;
use crate::error::{Error, Result};
use crate::numerics::svd::{randomized_svd, CsrMatrix, SvdOptions};
use crate::numerics::Matrix;

/// Symmetric co-occurrence counts under the same windowing as training pairs.
pub fn cooccurrence(ids: &[u32], vocab_len: usize, window: usize) -> Vec<BTreeMap<u32, f64>> {
    let mut rows = vec![BTreeMap::new(); vocab_len];
    for p in iter_pairs(ids, window) {
        *rows[p.target as usize].entry(p.context).or_insert(0.0) += 1.0;
    }
    rows
}

/// `max(0, log p(w,c) / (p(w) p(c)))` with marginals taken from the counts.
pub fn ppmi_matrix(counts: &[BTreeMap<u32, f64>]) -> CsrMatrix {
    let n = counts.len();
    let row_sums: Vec<f64> = counts.iter().map(|r| r.values().sum()).collect();
    let mut col_sums = vec![0.0; n];
    for row in counts {
        for (&c, &v) in row {
            col_sums[c as usize] += v;
        }
    }
    let total: f64 = row_sums.iter().sum();
    let rows = counts
        .iter()
        .enumerate()
        .map(|(w, row)| {
            row.iter()
                .filter_map(|(&c, &v)| {
                    let pmi = (v * total / (row_sums[w] * col_sums[c as usize])).ln();
                    (pmi > 0.0).then_some((c, pmi))
                })
                .collect()
        })
        .collect();
    CsrMatrix::from_rows(n, rows)
}

/// Rank-`dim` PPMI-SVD embeddings, one row per vocabulary id.
pub fn ppmi_svd<R: Rng>(
    ids: &[u32],
    vocab_len: usize,
    window: usize,
    dim: usize,
    rng: &mut R,
) -> Result<Matrix> {
    if window < 1 {
        return Err(Error::Config("window must be >= 1".into()));
    }
    if dim == 0 || dim > vocab_len {
        return Err(Error::Config(format!(
            "embedding dimension {dim} exceeds attainable rank {vocab_len}"
        )));
    }
    embed_counts(&cooccurrence(ids, vocab_len, window), dim, rng)
}

/// PPMI-SVD embeddings from precomputed co-occurrence counts. An all-zero
/// PPMI matrix yields zero vectors.
pub fn embed_counts<R: Rng>(
    counts: &[BTreeMap<u32, f64>],
    dim: usize,
    rng: &mut R,
) -> Result<Matrix> {
    if dim == 0 || dim > counts.len() {
        return Err(Error::Config(format!(
            "embedding dimension {dim} exceeds attainable rank {}",
            counts.len()
        )));
    }
    let ppmi = ppmi_matrix(counts);
    if ppmi.nnz() == 0 {
        return Ok(Matrix::zeros(counts.len(), dim));
    }
    let svd = randomized_svd(&ppmi, dim, SvdOptions::default(), rng)?;
    Ok(embeddings_from_svd(&svd.u, &svd.s))
}

pub(crate) fn embeddings_from_svd(u: &Matrix, s: &[f64]) -> Matrix {
    let roots: Vec<f64> = s.iter().map(|x| x.max(0.0).sqrt()).collect();
    Matrix::from_fn(u.rows(), s.len(), |r, c| u.get(r, c) * roots[c])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn independent_pair_has_zero_ppmi() {
        // Four cells with p(w,c) = p(w) p(c) for every entry.
        let mut counts = vec![BTreeMap::new(), BTreeMap::new()];
        counts[0].insert(0, 1.0);
        counts[0].insert(1, 1.0);
        counts[1].insert(0, 1.0);
        counts[1].insert(1, 1.0);
        assert_eq!(ppmi_matrix(&counts).nnz(), 0);
    }

    #[test]
    fn zero_ppmi_gives_zero_vectors() {
        let mut counts = vec![BTreeMap::new(), BTreeMap::new()];
        for (w, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            counts[w].insert(c, 3.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = embed_counts(&counts, 2, &mut rng).unwrap();
        assert!(m.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn symmetric_for_symmetric_windows() {
        let ids = [0, 1, 2, 0, 3, 1, 1, 2, 4, 0, 2, 3];
        let ppmi = ppmi_matrix(&cooccurrence(&ids, 5, 2)).to_dense();
        assert_eq!(ppmi, ppmi.transpose());
    }

    #[test]
    fn dim_above_rank_is_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(ppmi_svd(&[0, 1, 2], 3, 1, 4, &mut rng).is_err());
        assert!(ppmi_svd(&[0, 1, 2], 3, 0, 2, &mut rng).is_err());
    }
}
