//! Negative-sampling objective for one (word, context) observation.

use crate::error::{Error, Result};
use crate::numerics::activations::{log_sigmoid, sigmoid};
use crate::numerics::{axpy, dot, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct PairLoss {
    pub loss: f64,
    /// `∂loss/∂w`
    pub grad_word: Vec<f64>,
    /// `(context row, ∂loss/∂row)` for the positive then each negative; empty
    /// when context gradients were not requested.
    pub grad_contexts: Vec<(u32, Vec<f64>)>,
}

/// `−[log σ(w·c) + Σ_i log σ(−w·c̃_i)]` and its gradients.
pub fn pair_loss(
    word: &[f64],
    context: u32,
    negatives: &[u32],
    contexts: &Matrix,
    with_context_grads: bool,
) -> Result<PairLoss> {
    if word.len() != contexts.cols() {
        return Err(Error::shape("pair_loss", contexts.cols(), word.len()));
    }
    if let Some(&bad) = std::iter::once(&context)
        .chain(negatives)
        .find(|&&id| id as usize >= contexts.rows())
    {
        return Err(Error::shape(
            "pair_loss context id",
            format!("< {}", contexts.rows()),
            bad,
        ));
    }
    let mut grad_word = vec![0.0; word.len()];
    let mut grad_contexts = Vec::new();
    let mut loss = 0.0;
    let terms = std::iter::once((context, 1.0)).chain(negatives.iter().map(|&n| (n, -1.0)));
    for (id, label) in terms {
        let row = contexts.row(id as usize);
        let score = dot(word, row);
        if !score.is_finite() {
            return Err(Error::NonFinite("pair_loss dot product"));
        }
        loss -= log_sigmoid(label * score);
        // d/ds of −log σ(label·s) = −label·σ(−label·s)
        let g = -label * sigmoid(-label * score);
        axpy(g, row, &mut grad_word);
        if with_context_grads {
            grad_contexts.push((id, word.iter().map(|w| g * w).collect()));
        }
    }
    Ok(PairLoss {
        loss,
        grad_word,
        grad_contexts,
    })
}

/// Allocation-free variant used in the training loops: adds `∂loss/∂w` into
/// `grad_word` and returns the loss.
pub(crate) fn accumulate_pair_loss(
    word: &[f64],
    context: u32,
    negatives: &[u32],
    contexts: &Matrix,
    grad_word: &mut [f64],
) -> f64 {
    let mut loss = 0.0;
    let terms = std::iter::once((context, 1.0)).chain(negatives.iter().map(|&n| (n, -1.0)));
    for (id, label) in terms {
        let row = contexts.row(id as usize);
        let score = dot(word, row);
        loss -= log_sigmoid(label * score);
        axpy(-label * sigmoid(-label * score), row, grad_word);
    }
    loss
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grad_check;

    #[test]
    fn zero_scores() {
        let ctx = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let r = pair_loss(&[0.0, 0.0], 0, &[1], &ctx, false).unwrap();
        assert!((r.loss - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((r.loss - 1.3863).abs() < 1e-4);
        assert!(r.grad_contexts.is_empty());
    }

    #[test]
    fn asymptote() {
        let ctx = Matrix::from_vec(2, 1, vec![1.0, -1.0]).unwrap();
        let r = pair_loss(&[60.0], 0, &[1, 1], &ctx, false).unwrap();
        assert!(r.loss < 1e-25);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let ctx = Matrix::from_fn(4, 3, |r, c| ((r * 3 + c) as f64 * 0.37).sin());
        let negs = [1, 3, 3];
        let mut w = vec![0.2, -0.4, 0.7];
        let r = pair_loss(&w, 2, &negs, &ctx, true).unwrap();
        let err = grad_check(
            |p| pair_loss(p, 2, &negs, &ctx, false).unwrap().loss,
            &mut w,
            &r.grad_word,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "{err}");

        // Context rows: perturb the positive row.
        let mut row = ctx.row(2).to_vec();
        let analytic = &r.grad_contexts[0].1;
        let err = grad_check(
            |p| {
                let mut c = ctx.clone();
                c.row_mut(2).copy_from_slice(p);
                pair_loss(&w, 2, &negs, &c, false).unwrap().loss
            },
            &mut row,
            analytic,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn accumulate_matches() {
        let ctx = Matrix::from_fn(3, 2, |r, c| (r as f64) - (c as f64) * 0.5);
        let w = [0.3, 0.1];
        let r = pair_loss(&w, 1, &[0, 2], &ctx, false).unwrap();
        let mut g = vec![0.0; 2];
        let loss = accumulate_pair_loss(&w, 1, &[0, 2], &ctx, &mut g);
        assert_eq!(loss, r.loss);
        assert_eq!(g, r.grad_word);
    }

    #[test]
    fn errors() {
        let ctx = Matrix::zeros(2, 2);
        assert!(pair_loss(&[0.0; 3], 0, &[1], &ctx, false).is_err());
        assert!(pair_loss(&[0.0; 2], 5, &[1], &ctx, false).is_err());
        assert!(pair_loss(&[f64::INFINITY, 0.0], 0, &[1], &Matrix::identity(2), false).is_err());
    }
}
