use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Logistic function, evaluated without overflow for any finite input.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)`, stable in both tails.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Max-shifted softmax.
pub fn softmax(scores: &[f64]) -> Result<Vec<f64>> {
    let mut out = scores.to_vec();
    softmax_in_place(&mut out)?;
    Ok(out)
}

pub fn softmax_in_place(scores: &mut [f64]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::EmptySoftmax);
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NonFinite("softmax scores"));
    }
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
    Ok(())
}

/// Backward pass of softmax: given the forward output `probs` and the upstream
/// gradient w.r.t. the probabilities, returns the gradient w.r.t. the scores.
pub fn softmax_backward(probs: &[f64], grad_probs: &[f64]) -> Vec<f64> {
    let weighted: f64 = probs.iter().zip(grad_probs).map(|(p, g)| p * g).sum();
    probs
        .iter()
        .zip(grad_probs)
        .map(|(p, g)| p * (g - weighted))
        .collect()
}

/// `tanh(W x + b)`
pub fn affine_tanh(w: &Matrix, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != w.cols() {
        return Err(Error::shape("affine_tanh input", w.cols(), x.len()));
    }
    if b.len() != w.rows() {
        return Err(Error::shape("affine_tanh bias", w.rows(), b.len()));
    }
    let mut out = vec![0.0; w.rows()];
    affine_tanh_into(w, b, x, &mut out);
    Ok(out)
}

pub(crate) fn affine_tanh_into(w: &Matrix, b: &[f64], x: &[f64], out: &mut [f64]) {
    w.matvec_into(x, out);
    for (o, bi) in out.iter_mut().zip(b) {
        *o = (*o + bi).tanh();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sigmoid_reference_points() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!(sigmoid(800.0) <= 1.0 && sigmoid(800.0).is_finite());
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0).is_finite());
    }

    #[test]
    fn log_sigmoid_tails() {
        assert!((log_sigmoid(0.0) + std::f64::consts::LN_2).abs() < 1e-15);
        assert!((log_sigmoid(-700.0) + 700.0).abs() < 1e-9);
        assert!(log_sigmoid(700.0).abs() < 1e-300);
    }

    #[test]
    fn softmax_reference_points() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        let p = softmax(&[2f64.ln(), 0.0]).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(softmax(&[]), Err(Error::EmptySoftmax)));
    }

    #[test]
    fn affine_tanh_cases() {
        let w = Matrix::zeros(3, 2);
        assert_eq!(
            affine_tanh(&w, &[0.0; 3], &[5.0, -2.0]).unwrap(),
            vec![0.0; 3]
        );

        let x = [0.5 * 3f64.ln(), 0.0];
        let out = affine_tanh(&Matrix::identity(2), &[0.0; 2], &x).unwrap();
        assert!((out[0] - 0.5).abs() < 1e-15);
        assert_eq!(out[1], 0.0);

        assert!(affine_tanh(&w, &[0.0; 2], &[1.0, 1.0]).is_err());
        assert!(affine_tanh(&w, &[0.0; 3], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn sigmoid_symmetry(x in -700.0f64..700.0) {
            prop_assert!((sigmoid(-x) - (1.0 - sigmoid(x))).abs() < 1e-15);
        }

        #[test]
        fn softmax_is_distribution_and_shift_invariant(
            scores in prop::collection::vec(-50.0f64..50.0, 1..20),
            shift in -100.0f64..100.0,
        ) {
            let p = softmax(&scores).unwrap();
            let total: f64 = p.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-6);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
            let q = softmax(&shifted).unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn affine_tanh_range(
            vals in prop::collection::vec(-3.0f64..3.0, 12),
            x in prop::collection::vec(-3.0f64..3.0, 4),
        ) {
            let w = Matrix::from_vec(3, 4, vals).unwrap();
            let out = affine_tanh(&w, &[0.1, -0.2, 0.3], &x).unwrap();
            prop_assert!(out.iter().all(|v| v.abs() <= 1.0));
        }
    }
}
