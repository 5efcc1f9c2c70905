//! Training orchestration: weighted coin-flip task scheduling, the epoch
//! loop with early stopping, the coin-weight grid search, and multi-seed
//! aggregation.

mod config;
mod grid;
mod schedule;
mod trainer;

pub use config::{Mode, TrainConfig};
pub use grid::{grid_search_weight, multi_seed_report, AggregateReport, GridCell, GridResult};
pub use schedule::{sample_task, TaskChoice};
pub use trainer::{
    build_domain_dataset, run_single, EpochRecord, ExperimentData, RunRecord, Task, Trainer,
};

/// Stream tags for deriving independent RNG streams from one run seed.
/// Keeping the streams separate makes the baseline and the multi-task
/// trainer consume identical scheduler draws, so `w_main = 1` multi-task
/// training is bit-identical to baseline training.
pub mod stream {
    /// Parameter initialization.
    pub const INIT: u64 = 1;
    /// Task scheduling coin flips.
    pub const SCHED: u64 = 2;
    /// Random embedding tables.
    pub const EMBED: u64 = 3;
    /// Random-baseline predictions.
    pub const BASELINE: u64 = 4;
    /// Batch shuffling; add the task index.
    pub const BATCH: u64 = 16;
}
