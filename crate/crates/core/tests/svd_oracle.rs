//! Randomized truncated SVD and PPMI-SVD checked against nalgebra's dense SVD.

use char2vec::embedder::ppmi::{cooccurrence, embed_counts, ppmi_matrix};
use char2vec::numerics::svd::{randomized_svd, SvdOptions};
use char2vec::numerics::Matrix;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn to_dense(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |r, c| m.get(r, c))
}

fn reconstruct(u: &Matrix, s: &[f64], v: &Matrix) -> Matrix {
    Matrix::from_fn(u.rows(), v.rows(), |r, c| {
        (0..s.len()).map(|k| u.get(r, k) * s[k] * v.get(c, k)).sum()
    })
}

#[test]
fn rank_one_matrices_are_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..25 {
        let (m, n) = (rng.gen_range(1..=20), rng.gen_range(1..=20));
        let x: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..5.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
        let a = Matrix::from_fn(m, n, |r, c| x[r] * y[c]);
        let svd = randomized_svd(&a, 1, SvdOptions::default(), &mut rng).unwrap();
        let back = reconstruct(&svd.u, &svd.s, &svd.v);
        let err = a
            .as_slice()
            .iter()
            .zip(back.as_slice())
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{m}x{n}: {err:e}");

        let dense = to_dense(&a).svd(false, false);
        let top = dense.singular_values.max();
        assert!((svd.s[0] - top).abs() < 1e-9 * top);
    }
}

#[test]
fn singular_values_match_dense_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let (m, n) = (rng.gen_range(2..=20), rng.gen_range(2..=20));
        let a = Matrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
        let k = rng.gen_range(1..=m.min(n));
        let svd = randomized_svd(&a, k, SvdOptions::default(), &mut rng).unwrap();
        let mut expected: Vec<f64> = to_dense(&a)
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        expected.sort_by(|p, q| q.partial_cmp(p).unwrap());
        for i in 0..k {
            assert!(
                (svd.s[i] - expected[i]).abs() < 1e-8 * expected[0],
                "{m}x{n} k={k} i={i}: {} vs {}",
                svd.s[i],
                expected[i]
            );
        }
        // Columns of U and V are orthonormal.
        let utu = svd.u.transpose().matmul(&svd.u).unwrap();
        let vtv = svd.v.transpose().matmul(&svd.v).unwrap();
        for i in 0..k {
            for j in 0..k {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((utu.get(i, j) - id).abs() < 1e-8);
                assert!((vtv.get(i, j) - id).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn ppmi_embeddings_match_dense_factorization() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let v = rng.gen_range(4..=15);
        let ids: Vec<u32> = (0..400).map(|_| rng.gen_range(0..v as u32)).collect();
        let counts = cooccurrence(&ids, v, 3);
        let ppmi = ppmi_matrix(&counts).to_dense();
        let emb = embed_counts(&counts, v, &mut rng).unwrap();

        // With full rank, E·Eᵀ = U·Σ·Uᵀ, which is independent of sign choices.
        let dense = to_dense(&ppmi).svd(true, false);
        let u = dense.u.unwrap();
        let oracle = &u * DMatrix::from_diagonal(&dense.singular_values) * u.transpose();
        let gram = to_dense(&emb) * to_dense(&emb).transpose();
        let err = (oracle - gram).abs().max();
        assert!(err < 1e-8, "|V| = {v}: {err:e}");
    }
}

proptest! {
    #[test]
    fn ppmi_is_symmetric(ids in prop::collection::vec(0u32..8, 2..120), window in 1usize..5) {
        let ppmi = ppmi_matrix(&cooccurrence(&ids, 8, window)).to_dense();
        for r in 0..8 {
            for c in 0..8 {
                prop_assert_eq!(ppmi.get(r, c), ppmi.get(c, r));
                prop_assert!(ppmi.get(r, c) >= 0.0);
            }
        }
    }
}
