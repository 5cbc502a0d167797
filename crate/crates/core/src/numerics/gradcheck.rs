//! Central finite-difference gradient checking.

use super::matrix::norm;
use crate::error::{Error, Result};

/// Relative error with an absolute floor of `1e-8` in the denominator.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / denom
}

/// Central-difference estimate of `∂loss/∂params[i]` for every `i`.
///
/// `params` is perturbed in place and restored before returning.
pub fn numeric_gradient<F>(mut loss: F, params: &mut [f64], epsilon: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = params[i];
        params[i] = orig + epsilon;
        let plus = loss(params);
        params[i] = orig - epsilon;
        let minus = loss(params);
        params[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite("loss during gradient check"));
        }
        grad.push((plus - minus) / (2.0 * epsilon));
    }
    Ok(grad)
}

/// `‖a − n‖ / max(‖a‖, ‖n‖)` over a whole tensor, zero when both vanish.
pub fn tensor_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n) * (a - n))
        .sum::<f64>()
        .sqrt();
    let scale = norm(analytic).max(norm(numeric));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Outcome of checking one tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// [`tensor_relative_error`] of the whole gradient.
    pub tensor: f64,
    /// Worst [`relative_error`] over single coordinates. Coordinates whose
    /// true gradient is near the rounding noise of the difference quotient
    /// (about `1e-16 · |loss| / ε`) dominate this figure.
    pub max_elementwise: f64,
}

/// Compares an analytic gradient against central differences and returns the
/// worst relative error over all coordinates.
pub fn grad_check<F>(loss: F, params: &mut [f64], analytic: &[f64], epsilon: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    Ok(grad_check_tensor(loss, params, analytic, epsilon)?.max_elementwise)
}

/// Like [`grad_check`], reporting both the tensor-level and the per-coordinate
/// error.
pub fn grad_check_tensor<F>(
    loss: F,
    params: &mut [f64],
    analytic: &[f64],
    epsilon: f64,
) -> Result<GradCheck>
where
    F: FnMut(&[f64]) -> f64,
{
    if analytic.len() != params.len() {
        return Err(Error::shape("grad_check", params.len(), analytic.len()));
    }
    if !(1e-6..=1e-3).contains(&epsilon) {
        return Err(Error::Config(format!(
            "finite-difference epsilon {epsilon} outside [1e-6, 1e-3]"
        )));
    }
    let numeric = numeric_gradient(loss, params, epsilon)?;
    Ok(GradCheck {
        tensor: tensor_relative_error(analytic, &numeric),
        max_elementwise: analytic
            .iter()
            .zip(&numeric)
            .map(|(&a, &n)| relative_error(a, n))
            .fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let mut x = vec![3.0];
        let err = grad_check(|p| p[0] * p[0], &mut x, &[6.0], 1e-5).unwrap();
        assert!(err < 1e-7, "{err}");
        assert_eq!(x, vec![3.0]);
    }

    #[test]
    fn constant_function() {
        let mut x = vec![1.0, -4.0];
        let err = grad_check(|_| 2.5, &mut x, &[0.0, 0.0], 1e-4).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn detects_wrong_gradient() {
        let mut x = vec![1.0];
        let err = grad_check(|p| p[0].powi(3), &mut x, &[2.0], 1e-5).unwrap();
        assert!(err > 0.3);
    }

    #[test]
    fn non_finite_loss_rejected() {
        let mut x = vec![0.0];
        let r = grad_check(
            |p| 1.0 / p[0].abs().min(1e-6) - 1e6 + f64::NAN,
            &mut x,
            &[0.0],
            1e-5,
        );
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn tensor_error_is_scale_free() {
        let a = [1.0, 2.0, 2.0];
        let n = [1.0, 2.0, 2.0 + 3e-3];
        let e = tensor_relative_error(&a, &n);
        let expected = 3e-3 / (1.0f64 + 4.0 + 2.003 * 2.003).sqrt();
        assert!((e - expected).abs() < 1e-12, "{e}");
        let a10: Vec<f64> = a.iter().map(|x| x * 10.0).collect();
        let n10: Vec<f64> = n.iter().map(|x| x * 10.0).collect();
        assert!((tensor_relative_error(&a10, &n10) - e).abs() < 1e-12 * e);
        assert_eq!(tensor_relative_error(&[0.0], &[0.0]), 0.0);
    }

    #[test]
    fn epsilon_range_enforced() {
        let mut x = vec![0.0];
        assert!(grad_check(|p| p[0], &mut x, &[1.0], 0.1).is_err());
    }
}
