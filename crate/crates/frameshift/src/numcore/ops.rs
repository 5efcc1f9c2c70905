//! Standalone numeric primitives. The same math backs the tape ops in
//! [`super::tape`]; these free functions are the inference-time and
//! test-oracle entry points.

use crate::error::{Error, Result};

/// Floor applied to probabilities inside the log, so a zero-probability
/// gold class yields a large finite loss instead of infinity.
pub const CROSS_ENTROPY_EPS: f64 = 1e-12;

pub fn sigmoid_scalar(x: f64) -> f64 {
    // Split on sign so large |x| saturates instead of overflowing exp.
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn tanh_scalar(x: f64) -> f64 {
    x.tanh()
}

/// Numerically stable softmax: `exp(z - max z) / sum exp(z - max z)`.
pub fn softmax(z: &[f64]) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(Error::Shape {
            op: "softmax",
            expected: "nonempty vector".into(),
            got: "length 0".into(),
        });
    }
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// `-ln(max(p[y], eps))` with `eps = 1e-12`. Requires `p` to sum to 1
/// within 1e-6 and `y` to index into `p`.
pub fn cross_entropy(p: &[f64], y: usize) -> Result<f64> {
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Numeric(format!(
            "cross_entropy input sums to {sum}, not 1"
        )));
    }
    if y >= p.len() {
        return Err(Error::Label(format!(
            "class index {y} out of range for {} classes",
            p.len()
        )));
    }
    Ok(-(p[y].max(CROSS_ENTROPY_EPS)).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_at_zero() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
    }

    #[test]
    fn tanh_at_zero() {
        assert_eq!(tanh_scalar(0.0), 0.0);
    }

    #[test]
    fn sigmoid_saturates_without_nan() {
        assert!((sigmoid_scalar(1000.0) - 1.0).abs() < 1e-12);
        assert!(sigmoid_scalar(-1000.0).abs() < 1e-12);
        assert!(sigmoid_scalar(1000.0).is_finite());
    }

    #[test]
    fn softmax_symmetry() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_max_shift_stability() {
        let p = softmax(&[1000.0, 0.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(p[1].abs() < 1e-12);
    }

    #[test]
    fn softmax_of_log_weights() {
        let z: Vec<f64> = [1.0f64, 2.0, 3.0, 4.0].iter().map(|v| v.ln()).collect();
        let p = softmax(&z).unwrap();
        let expected = [0.1, 0.2, 0.3, 0.4];
        for (got, want) in p.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn softmax_rejects_empty() {
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn cross_entropy_perfect_prediction() {
        assert_eq!(cross_entropy(&[1.0, 0.0, 0.0], 0).unwrap(), 0.0);
    }

    #[test]
    fn cross_entropy_uniform_binary() {
        let l = cross_entropy(&[0.5, 0.5], 1).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_direct_evaluation() {
        let l = cross_entropy(&[0.1, 0.2, 0.7], 2).unwrap();
        assert!((l - (-0.7f64.ln())).abs() < 1e-12);
        assert!((l - 0.356_674_943_938_732_3).abs() < 1e-9);
    }

    #[test]
    fn cross_entropy_rejects_bad_label() {
        assert!(matches!(
            cross_entropy(&[0.5, 0.5], 2),
            Err(Error::Label(_))
        ));
    }

    #[test]
    fn cross_entropy_clamps_zero_probability() {
        let l = cross_entropy(&[1.0, 0.0], 1).unwrap();
        assert!(l.is_finite());
        assert!((l - (-CROSS_ENTROPY_EPS.ln())).abs() < 1e-9);
    }
}
