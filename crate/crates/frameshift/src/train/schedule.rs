//! Weighted coin-flip task scheduling.

use crate::error::{Error, Result};
use crate::numcore::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskChoice {
    Main,
    /// Index into the auxiliary/adversarial task list.
    Aux(usize),
}

/// Draw the task for one iteration: main with probability `w_main`,
/// otherwise one of the `n_aux` helper tasks uniformly at random.
///
/// Exactly one coin flip is consumed when main is drawn (plus one uniform
/// draw on the helper branch), so schedules depend only on the outcome
/// sequence, not on how many helper tasks exist.
pub fn sample_task(rng: &mut Rng, w_main: f64, n_aux: usize) -> Result<TaskChoice> {
    if !(w_main > 0.0 && w_main <= 1.0) {
        return Err(Error::Config(format!(
            "main-task weight must lie in (0, 1], got {w_main}"
        )));
    }
    if w_main < 1.0 && n_aux == 0 {
        return Err(Error::Config(
            "main-task weight below 1 requires at least one auxiliary task".into(),
        ));
    }
    let coin = rng.next_f64();
    if coin < w_main {
        Ok(TaskChoice::Main)
    } else {
        Ok(TaskChoice::Aux(rng.below(n_aux)))
    }
}
