//! Finite-difference gradient checking.

use super::rng::Rng;
use super::tape::Gradients;
use super::tensor::ParamStore;
use crate::error::Result;

/// Central-difference step. With 64-bit floats this sits near the sweet spot
/// between truncation and cancellation error.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub entries_checked: usize,
    pub tolerance: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

/// Compare the analytic gradients produced by `loss_fn` against central
/// finite differences of its loss value.
///
/// `loss_fn` must be deterministic in the parameter values. When
/// `sample_per_param` is given, at most that many entries of each parameter
/// are probed (chosen with `rng`); otherwise every entry is probed.
pub fn grad_check<F>(
    params: &mut ParamStore,
    loss_fn: F,
    tolerance: f64,
    mut sample_per_param: Option<(usize, &mut Rng)>,
) -> Result<GradCheckReport>
where
    F: Fn(&ParamStore) -> Result<(f64, Gradients)>,
{
    let (_, analytic) = loss_fn(params)?;
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        entries_checked: 0,
        tolerance,
        worst: None,
    };

    let touched: Vec<_> = analytic.iter().map(|(id, _)| id).collect();
    for id in touched {
        let n = params.get(id).value.len();
        let indices: Vec<usize> = match sample_per_param {
            Some((k, ref mut rng)) if k < n => rng.sample_indices(n, k),
            _ => (0..n).collect(),
        };
        for i in indices {
            let orig = params.get(id).value.values[i];
            params.get_mut(id).value.values[i] = orig + FD_STEP;
            let (loss_plus, _) = loss_fn(params)?;
            params.get_mut(id).value.values[i] = orig - FD_STEP;
            let (loss_minus, _) = loss_fn(params)?;
            params.get_mut(id).value.values[i] = orig;

            let fd = (loss_plus - loss_minus) / (2.0 * FD_STEP);
            let a = analytic.get(id).map_or(0.0, |g| g[i]);
            let err = rel_error(a, fd);
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = Some((params.get(id).name.clone(), i));
            }
            report.entries_checked += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{Param, Tape, Tensor2};

    #[test]
    fn affine_softmax_ce_passes_at_1e4() {
        let mut store = ParamStore::new();
        let w = store.add(Param::trainable(
            "w",
            Tensor2::from_vec(3, 2, vec![0.3, -0.1, 0.2, 0.5, -0.4, 0.1]),
        ));
        let b = store.add(Param::trainable("b", Tensor2::column(&[0.1, -0.2, 0.05])));
        let loss_fn = |p: &ParamStore| {
            let mut tape = Tape::new();
            let x = tape.input(vec![0.7, -1.2]);
            let z = tape.affine(p, w, b, x)?;
            let probs = tape.softmax(z)?;
            let loss = tape.cross_entropy(probs, 1)?;
            let grads = tape.backward(p, loss, 1.0)?;
            Ok((tape.scalar(loss), grads))
        };
        let report = grad_check(&mut store, loss_fn, 1e-4, None).unwrap();
        assert!(report.passed(), "max rel error {}", report.max_rel_error);
        assert_eq!(report.entries_checked, 9);
    }

    #[test]
    fn detects_a_wrong_gradient() {
        let mut store = ParamStore::new();
        let w = store.add(Param::trainable("w", Tensor2::from_vec(1, 1, vec![0.5])));
        let b = store.add(Param::trainable("b", Tensor2::column(&[0.0])));
        let loss_fn = |p: &ParamStore| {
            let mut tape = Tape::new();
            let x = tape.input(vec![2.0]);
            let y = tape.affine(p, w, b, x)?;
            let mut grads = tape.backward(p, y, 1.0)?;
            // Corrupt the analytic gradient.
            grads.scale_subset(&[w], 3.0);
            Ok((tape.scalar(y), grads))
        };
        let report = grad_check(&mut store, loss_fn, 1e-4, None).unwrap();
        assert!(!report.passed());
        assert_eq!(report.worst.as_ref().unwrap().0, "w");
    }
}
