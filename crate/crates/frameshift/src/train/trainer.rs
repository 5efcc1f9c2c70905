//! The epoch loop: batch draws, SGD updates, dev-set model selection with
//! early stopping, and checkpoint restoration.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use super::config::{Mode, TrainConfig};
use super::schedule::{sample_task, TaskChoice};
use super::stream;
use crate::data::{CyclingBatcher, Instance, LabelSet, TaskDataset};
use crate::error::{Error, Result};
use crate::eval::evaluate_model;
use crate::eval::EvalReport;
use crate::model::{HeadSpec, Model};
use crate::numcore::{sgd_step, ParamStore, Rng};
use crate::preprocess::EmbeddingTable;

/// One task wired into a training run: its (single-label) dataset and the
/// model head it drives. The main task is always `tasks[0]`.
#[derive(Debug)]
pub struct Task {
    pub name: String,
    pub dataset: TaskDataset,
    pub head_idx: usize,
}

/// Per-epoch statistics, also the unit of the run log.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub iterations: usize,
    /// Mean loss per task over the iterations that drew it.
    pub task_losses: BTreeMap<String, f64>,
    /// Updates per task this epoch.
    pub task_updates: BTreeMap<String, usize>,
    pub dev_macro_f: f64,
}

/// Outcome of one seeded training run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub seed: u64,
    /// One entry per epoch; `dev_macro_f` history lives here.
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_dev_macro_f: f64,
    /// Report of the restored best model on the dev set.
    pub dev_report: EvalReport,
    /// Report on the test set, when one was supplied.
    pub test_report: Option<EvalReport>,
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn dev_history(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.dev_macro_f).collect()
    }
}

/// Drives one model through epochs. Scheduling and each task's batch
/// stream draw from independent RNG streams forked off the run seed, so a
/// run is fully determined by (config, seed, data).
pub struct Trainer {
    pub model: Model,
    pub tasks: Vec<Task>,
    config: TrainConfig,
    seed: u64,
    effective_weight: f64,
    sched_rng: Rng,
    batchers: Vec<CyclingBatcher>,
    iterations_per_epoch: usize,
    epoch: usize,
}

impl Trainer {
    pub fn new(model: Model, tasks: Vec<Task>, config: TrainConfig, seed: u64) -> Result<Trainer> {
        config.validate()?;
        if tasks.is_empty() {
            return Err(Error::Config("no tasks to train on".into()));
        }
        for task in &tasks {
            if task.dataset.is_empty() {
                return Err(Error::EmptyDataset(task.name.clone()));
            }
            if task.head_idx >= model.heads.len() {
                return Err(Error::Config(format!(
                    "task `{}` refers to missing head {}",
                    task.name, task.head_idx
                )));
            }
        }
        // A run with only the main task is a baseline run regardless of the
        // configured coin weight.
        let effective_weight = if tasks.len() == 1 { 1.0 } else { config.main_weight };
        let root = Rng::from_seed(seed);
        let batchers = (0..tasks.len())
            .map(|i| CyclingBatcher::new(config.batch_size, root.fork(stream::BATCH + i as u64)))
            .collect();
        let main_len = tasks[0].dataset.len();
        let iterations_per_epoch = config.iters_factor * main_len.div_ceil(config.batch_size);
        Ok(Trainer {
            model,
            tasks,
            seed,
            effective_weight,
            sched_rng: root.fork(stream::SCHED),
            batchers,
            iterations_per_epoch,
            config,
            epoch: 0,
        })
    }

    pub fn iterations_per_epoch(&self) -> usize {
        self.iterations_per_epoch
    }

    /// One epoch: `iters_factor x ceil(|main| / batch_size)` iterations,
    /// each drawing a task by coin flip, pulling its next batch, and
    /// applying one SGD step.
    pub fn run_epoch(&mut self, dev: &TaskDataset) -> Result<EpochRecord> {
        self.epoch += 1;
        let mut loss_sums: BTreeMap<String, f64> = BTreeMap::new();
        let mut update_counts: BTreeMap<String, usize> = BTreeMap::new();
        for _ in 0..self.iterations_per_epoch {
            let choice = sample_task(
                &mut self.sched_rng,
                self.effective_weight,
                self.tasks.len() - 1,
            )?;
            let task_idx = match choice {
                TaskChoice::Main => 0,
                TaskChoice::Aux(i) => i + 1,
            };
            let task = &self.tasks[task_idx];
            let batch = self.batchers[task_idx].next_batch(&task.dataset);
            let (loss, grads) = self
                .model
                .batch_loss_backward(task.head_idx, &task.dataset, &batch)
                .map_err(|e| {
                    Error::Numeric(format!(
                        "epoch {} task `{}`: {e}",
                        self.epoch, task.name
                    ))
                })?;
            sgd_step(
                &mut self.model.params,
                &grads,
                self.config.lr,
                self.config.weight_decay,
            )?;
            *loss_sums.entry(task.name.clone()).or_insert(0.0) += loss;
            *update_counts.entry(task.name.clone()).or_insert(0) += 1;
        }
        let task_losses = loss_sums
            .into_iter()
            .map(|(name, sum)| {
                let n = update_counts[&name] as f64;
                (name, sum / n)
            })
            .collect();
        let dev_macro_f = evaluate_model(&self.model, self.tasks[0].head_idx, dev)?.macro_f1;
        Ok(EpochRecord {
            epoch: self.epoch,
            iterations: self.iterations_per_epoch,
            task_losses,
            task_updates: update_counts,
            dev_macro_f,
        })
    }

    /// Train with early stopping: after each epoch the dev macro-F decides
    /// whether the current parameters become the new best checkpoint.
    /// Stopping is considered only after `min_epochs`; training stops once
    /// `patience` epochs have passed without improvement, counted from the
    /// best epoch or from the `min_epochs` floor, whichever is later. The
    /// best checkpoint is restored before returning.
    pub fn train(&mut self, dev: &TaskDataset, test: Option<&TaskDataset>) -> Result<RunRecord> {
        let started = Instant::now();
        let mut epochs: Vec<EpochRecord> = Vec::new();
        let mut best_epoch = 0usize;
        let mut best_macro_f = f64::NEG_INFINITY;
        let mut best_params: Option<ParamStore> = None;

        loop {
            let record = self.run_epoch(dev)?;
            let epoch = record.epoch;
            if record.dev_macro_f > best_macro_f {
                best_macro_f = record.dev_macro_f;
                best_epoch = epoch;
                best_params = Some(self.model.params.clone());
            }
            epochs.push(record);
            let waited = epoch.saturating_sub(best_epoch.max(self.config.min_epochs));
            if epoch >= self.config.min_epochs && waited >= self.config.patience {
                break;
            }
            if epoch >= self.config.max_epochs {
                break;
            }
        }

        self.model.params = best_params.expect("at least one epoch ran");
        let dev_report = evaluate_model(&self.model, self.tasks[0].head_idx, dev)?;
        debug_assert!((dev_report.macro_f1 - best_macro_f).abs() < 1e-12);
        let test_report = match test {
            Some(ds) => Some(evaluate_model(&self.model, self.tasks[0].head_idx, ds)?),
            None => None,
        };
        Ok(RunRecord {
            seed: self.seed,
            epochs,
            best_epoch,
            best_dev_macro_f: best_macro_f,
            dev_report,
            test_report,
            wall_time_s: started.elapsed().as_secs_f64(),
        })
    }
}

/// Assemble the source-vs-target discrimination dataset for the
/// adversarial task: label 0 for every source instance, label 1 for every
/// unlabeled target instance.
pub fn build_domain_dataset(source: &TaskDataset, target_unlabeled: &TaskDataset) -> Result<TaskDataset> {
    let mut instances = Vec::with_capacity(source.len() + target_unlabeled.len());
    for inst in &source.instances {
        let mut copy = inst.clone();
        copy.labels = BTreeSet::from([0]);
        instances.push(copy);
    }
    for inst in &target_unlabeled.instances {
        let mut copy = inst.clone();
        copy.labels = BTreeSet::from([1]);
        instances.push(copy);
    }
    TaskDataset::new("domain", LabelSet::Domain, instances)
}

/// Everything one experiment needs besides the config: datasets are
/// already expanded to single labels where they feed training.
pub struct ExperimentData<'a> {
    pub main: &'a TaskDataset,
    pub aux: Vec<&'a TaskDataset>,
    pub domain: Option<&'a TaskDataset>,
    pub dev: &'a TaskDataset,
    pub test: Option<&'a TaskDataset>,
    pub embeddings: &'a EmbeddingTable,
}

/// Build the model and task list for `config.mode` and run one seeded
/// training. `weight` overrides the config's coin weight (the grid search
/// sweeps it).
pub fn run_single(
    data: &ExperimentData,
    config: &TrainConfig,
    weight: f64,
    seed: u64,
) -> Result<(Model, RunRecord)> {
    let mut config = config.clone();
    config.main_weight = weight;
    config.validate()?;

    let mut head_specs = vec![HeadSpec::plain("main", data.main.label_set)];
    let mut tasks_meta: Vec<(&str, &TaskDataset)> = vec![("main", data.main)];
    match config.mode {
        Mode::Baseline => {}
        Mode::Multitask => {
            if data.aux.is_empty() {
                return Err(Error::Config("multitask mode requires auxiliary corpora".into()));
            }
            for ds in &data.aux {
                head_specs.push(HeadSpec::plain(ds.task.clone(), ds.label_set));
                tasks_meta.push((ds.task.as_str(), ds));
            }
        }
        Mode::Adversarial => {
            let domain = data.domain.ok_or_else(|| {
                Error::Config("adversarial mode requires the domain dataset".into())
            })?;
            head_specs.push(HeadSpec::adversarial("domain", config.lambda_rev));
            tasks_meta.push(("domain", domain));
        }
    }

    let root = Rng::from_seed(seed);
    let mut init_rng = root.fork(stream::INIT);
    let model = Model::new(
        data.embeddings,
        config.hidden,
        config.layers,
        &head_specs,
        &mut init_rng,
    )?;
    let tasks: Vec<Task> = tasks_meta
        .into_iter()
        .enumerate()
        .map(|(i, (name, ds))| Task {
            name: name.to_string(),
            dataset: ds.clone(),
            head_idx: i,
        })
        .collect();

    let mut trainer = Trainer::new(model, tasks, config, seed)?;
    let record = trainer.train(data.dev, data.test)?;
    Ok((trainer.model, record))
}
