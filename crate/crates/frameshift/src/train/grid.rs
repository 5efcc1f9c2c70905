//! Coin-weight grid search and multi-seed aggregation.

use serde::Serialize;

use super::config::TrainConfig;
use super::trainer::{run_single, ExperimentData, RunRecord};
use crate::error::{Error, Result};

/// The default grid swept over the main-task coin weight.
pub const DEFAULT_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct GridCell {
    pub weight: f64,
    pub per_seed_dev_macro_f: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    pub best_weight: f64,
    pub best_mean: f64,
    pub best_std: f64,
}

/// Sweep the coin weight: train once per (weight, seed), score each weight
/// by mean dev macro-F across seeds, break ties by smaller std, then by
/// smaller weight.
pub fn grid_search_weight(
    data: &ExperimentData,
    config: &TrainConfig,
    grid: &[f64],
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::Config("empty weight grid".into()));
    }
    let mut cells = Vec::with_capacity(grid.len());
    for &weight in grid {
        let mut per_seed = Vec::with_capacity(config.seeds.len());
        for &seed in &config.seeds {
            let (_, record) = run_single(data, config, weight, seed)?;
            per_seed.push(record.best_dev_macro_f);
        }
        let (mean, std) = mean_std(&per_seed);
        cells.push(GridCell {
            weight,
            per_seed_dev_macro_f: per_seed,
            mean,
            std,
        });
    }
    let best = select_best(&cells);
    Ok(GridResult {
        best_weight: best.weight,
        best_mean: best.mean,
        best_std: best.std,
        cells,
    })
}

/// Selection key: highest mean, then lowest std, then lowest weight.
pub(crate) fn select_best(cells: &[GridCell]) -> &GridCell {
    cells
        .iter()
        .min_by(|a, b| {
            b.mean
                .partial_cmp(&a.mean)
                .unwrap()
                .then(a.std.partial_cmp(&b.std).unwrap())
                .then(a.weight.partial_cmp(&b.weight).unwrap())
        })
        .expect("nonempty grid")
}

/// Mean and sample std of one metric across runs.
#[derive(Debug, Clone, Serialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    pub per_seed: Vec<f64>,
}

impl MetricSummary {
    fn from_values(values: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&values);
        MetricSummary {
            mean,
            std,
            per_seed: values,
        }
    }
}

/// Aggregate of the multi-run protocol. The selection key across
/// hyperparameter settings is (max mean dev macro-F, min std).
#[derive(Debug, Clone, Serialize)]
pub struct AggregateReport {
    pub n_runs: usize,
    pub seeds: Vec<u64>,
    pub dev_macro_f: MetricSummary,
    pub test_macro_precision: Option<MetricSummary>,
    pub test_macro_recall: Option<MetricSummary>,
    pub test_macro_f: Option<MetricSummary>,
    pub test_micro_f: Option<MetricSummary>,
}

/// Mean and std per metric across seeded runs.
pub fn multi_seed_report(records: &[RunRecord]) -> Result<AggregateReport> {
    if records.is_empty() {
        return Err(Error::Config("no run records to aggregate".into()));
    }
    let dev: Vec<f64> = records.iter().map(|r| r.best_dev_macro_f).collect();
    let test_metric = |f: fn(&crate::eval::EvalReport) -> f64| -> Option<MetricSummary> {
        let values: Option<Vec<f64>> = records
            .iter()
            .map(|r| r.test_report.as_ref().map(f))
            .collect();
        values.map(MetricSummary::from_values)
    };
    Ok(AggregateReport {
        n_runs: records.len(),
        seeds: records.iter().map(|r| r.seed).collect(),
        dev_macro_f: MetricSummary::from_values(dev),
        test_macro_precision: test_metric(|r| r.macro_precision),
        test_macro_recall: test_metric(|r| r.macro_recall),
        test_macro_f: test_metric(|r| r.macro_f1),
        test_micro_f: test_metric(|r| r.micro_f1),
    })
}
