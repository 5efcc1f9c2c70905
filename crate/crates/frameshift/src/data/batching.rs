//! Batch construction.

use super::{Batch, TaskDataset};
use crate::numcore::Rng;

/// One shuffled pass over the dataset. Every instance appears exactly once;
/// the last batch may be short.
pub fn batches(ds: &TaskDataset, batch_size: usize, rng: &mut Rng) -> Vec<Batch> {
    assert!(batch_size >= 1, "batch size must be at least 1");
    let mut order: Vec<usize> = (0..ds.len()).collect();
    rng.shuffle(&mut order);
    order
        .chunks(batch_size)
        .map(|chunk| Batch::from_indices(ds, chunk.to_vec()))
        .collect()
}

/// Endless batch stream over one task's data: a shuffled pass, reshuffled
/// whenever it is exhausted. Each task in a training run cycles
/// independently with its own RNG stream.
#[derive(Debug)]
pub struct CyclingBatcher {
    batch_size: usize,
    rng: Rng,
    queue: Vec<Batch>,
}

impl CyclingBatcher {
    pub fn new(batch_size: usize, rng: Rng) -> Self {
        assert!(batch_size >= 1, "batch size must be at least 1");
        CyclingBatcher {
            batch_size,
            rng,
            queue: Vec::new(),
        }
    }

    pub fn next_batch(&mut self, ds: &TaskDataset) -> Batch {
        if self.queue.is_empty() {
            let mut pass = batches(ds, self.batch_size, &mut self.rng);
            pass.reverse();
            self.queue = pass;
        }
        self.queue.pop().expect("dataset must be nonempty")
    }
}
