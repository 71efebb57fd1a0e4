//! Cross-entropy and reconstruction losses with their output-side gradients.

use crate::error::{Error, Result};

/// Clamping bound keeping predictions strictly inside (0, 1) before logs.
pub const PROB_EPS: f64 = 1e-7;

/// Binary cross-entropy, `-[y ln p + (1-y) ln(1-p)]` with `p` clamped to
/// `[PROB_EPS, 1 - PROB_EPS]`.
pub fn bce(y: f64, y_hat: f64) -> f64 {
    let p = y_hat.clamp(PROB_EPS, 1.0 - PROB_EPS);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Gradient of [`bce`] with respect to the prediction.
pub fn bce_grad(y: f64, y_hat: f64) -> f64 {
    let p = y_hat.clamp(PROB_EPS, 1.0 - PROB_EPS);
    (p - y) / (p * (1.0 - p))
}

/// Categorical cross-entropy, `-sum_k p_k ln p_hat_k` with predictions
/// clamped to `[PROB_EPS, 1]`.
pub fn cce(p: &[f64], p_hat: &[f64]) -> Result<f64> {
    if p.len() != p_hat.len() {
        return Err(Error::Shape(format!(
            "target length {} != prediction length {}",
            p.len(),
            p_hat.len()
        )));
    }
    Ok(p
        .iter()
        .zip(p_hat)
        .map(|(t, q)| -t * q.clamp(PROB_EPS, 1.0).ln())
        .sum())
}

/// Gradient of [`cce`] with respect to the prediction vector.
pub fn cce_grad(p: &[f64], p_hat: &[f64], out: &mut [f64]) {
    for i in 0..p.len() {
        out[i] = -p[i] / p_hat[i].clamp(PROB_EPS, 1.0);
    }
}

/// Mean squared reconstruction error.
pub fn mse(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(Error::Shape(format!(
            "input length {} != reconstruction length {}",
            x.len(),
            x_hat.len()
        )));
    }
    let sum: f64 = x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / x.len() as f64)
}

/// Gradient of `scale * mse(x, x_hat)` with respect to the reconstruction.
pub fn mse_grad(x: &[f64], x_hat: &[f64], scale: f64, out: &mut [f64]) {
    let k = 2.0 * scale / x.len() as f64;
    for i in 0..x.len() {
        out[i] = k * (x_hat[i] - x[i]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_analytic_values() {
        assert!((bce(1.0, 0.5) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((bce(0.0, 0.5) - std::f64::consts::LN_2).abs() < 1e-12);
        // calculator oracle: -ln 0.9
        assert!((bce(1.0, 0.9) - 0.10536051565782628).abs() < 1e-12);
    }

    #[test]
    fn bce_clamps_extremes() {
        assert!(bce(1.0, 0.0).is_finite());
        assert!(bce(0.0, 1.0).is_finite());
        assert!(bce(1.0, 0.0) > 0.0);
    }

    #[test]
    fn cce_analytic_values() {
        let one_hot = [0.0, 1.0, 0.0, 0.0];
        // perfect prediction -> 0 up to clamping
        assert!(cce(&one_hot, &one_hot).unwrap().abs() < 1e-6);
        let uniform = [0.25; 4];
        assert!((cce(&one_hot, &uniform).unwrap() - 4.0f64.ln()).abs() < 1e-12);
        // calculator oracle: -0.5 (ln 0.9 + ln 0.1)
        let v = cce(&[0.5, 0.5], &[0.9, 0.1]).unwrap();
        assert!((v - 1.2039728043259361).abs() < 1e-12);
    }

    #[test]
    fn cce_length_mismatch_is_shape_error() {
        assert!(matches!(
            cce(&[1.0, 0.0], &[0.5, 0.3, 0.2]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn mse_analytic_values() {
        let x = [0.2, 0.8, 0.5];
        assert_eq!(mse(&x, &x).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn mse_matches_elementwise_recomputation() {
        let x: [f64; 5] = [0.1, 0.9, 0.3, 0.7, 0.5];
        let x_hat: [f64; 5] = [0.2, 0.4, 0.35, 0.9, 0.0];
        let mut expected = 0.0_f64;
        for i in 0..5 {
            expected += (x[i] - x_hat[i]).powi(2);
        }
        expected /= 5.0;
        assert!((mse(&x, &x_hat).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn losses_nonnegative_and_zero_only_at_match() {
        for &(y, p) in &[(0.0, 0.3), (1.0, 0.2), (1.0, 0.99)] {
            assert!(bce(y, p) > 0.0);
        }
        assert!(bce(1.0, 1.0) < 1e-6);
        assert!(bce(0.0, 0.0) < 1e-6);
    }
}
