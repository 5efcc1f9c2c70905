//! Confusion counting and precision/recall/F.
//!
//! Gold annotations may carry several labels per instance while the model
//! predicts exactly one. The scoring rule: a prediction inside the gold set
//! is a true positive for that class; a prediction outside it is a false
//! positive for the predicted class; every unmatched gold label counts a
//! false negative for its class.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::data::{LabelSet, TaskDataset};
use crate::error::{Error, Result};
use crate::model::Model;

/// Per-class true-positive / false-positive / false-negative counts over a
/// fixed label set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub label_set: LabelSet,
    pub tp: BTreeMap<u32, u64>,
    pub fp: BTreeMap<u32, u64>,
    pub fn_: BTreeMap<u32, u64>,
    pub n_instances: usize,
    pub n_gold_labels: usize,
}

impl ConfusionCounts {
    pub fn empty(label_set: LabelSet) -> Self {
        let zeroed: BTreeMap<u32, u64> = label_set.codes().iter().map(|&c| (c, 0)).collect();
        ConfusionCounts {
            label_set,
            tp: zeroed.clone(),
            fp: zeroed.clone(),
            fn_: zeroed,
            n_instances: 0,
            n_gold_labels: 0,
        }
    }
}

/// Count confusions for single-prediction, set-valued-gold classification.
pub fn score(
    predictions: &[u32],
    gold: &[BTreeSet<u32>],
    label_set: LabelSet,
) -> Result<ConfusionCounts> {
    if predictions.len() != gold.len() {
        return Err(Error::Alignment(format!(
            "{} predictions vs {} gold instances",
            predictions.len(),
            gold.len()
        )));
    }
    let mut counts = ConfusionCounts::empty(label_set);
    for (&pred, gold_set) in predictions.iter().zip(gold) {
        if !label_set.contains(pred) {
            return Err(Error::Label(format!(
                "prediction {pred} outside label set {label_set:?}"
            )));
        }
        for &g in gold_set {
            if !label_set.contains(g) {
                return Err(Error::Label(format!(
                    "gold label {g} outside label set {label_set:?}"
                )));
            }
        }
        counts.n_instances += 1;
        counts.n_gold_labels += gold_set.len();
        if gold_set.contains(&pred) {
            *counts.tp.get_mut(&pred).unwrap() += 1;
        } else {
            *counts.fp.get_mut(&pred).unwrap() += 1;
        }
        for &g in gold_set {
            if g != pred {
                *counts.fn_.get_mut(&g).unwrap() += 1;
            }
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub code: u32,
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

/// Per-class and aggregate precision/recall/F. Macro values are unweighted
/// means over the label set's classes; micro values come from pooled
/// counts. `0/0` ratios are defined as 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub n_instances: usize,
    pub n_gold_labels: usize,
    /// Run metadata echo (mode, seed, corpus, ...).
    pub run: BTreeMap<String, String>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn prf(counts: &ConfusionCounts) -> EvalReport {
    let codes = counts.label_set.codes();
    let mut per_class = Vec::with_capacity(codes.len());
    let (mut tp_sum, mut fp_sum, mut fn_sum) = (0u64, 0u64, 0u64);
    for &c in codes {
        let (tp, fp, fn_) = (counts.tp[&c], counts.fp[&c], counts.fn_[&c]);
        let p = ratio(tp, tp + fp);
        let r = ratio(tp, tp + fn_);
        per_class.push(ClassMetrics {
            code: c,
            name: counts.label_set.class_name(c),
            precision: p,
            recall: r,
            f1: f1(p, r),
            tp,
            fp,
            fn_,
        });
        tp_sum += tp;
        fp_sum += fp;
        fn_sum += fn_;
    }
    let k = codes.len() as f64;
    let macro_precision = per_class.iter().map(|m| m.precision).sum::<f64>() / k;
    let macro_recall = per_class.iter().map(|m| m.recall).sum::<f64>() / k;
    let macro_f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / k;
    let micro_precision = ratio(tp_sum, tp_sum + fp_sum);
    let micro_recall = ratio(tp_sum, tp_sum + fn_sum);
    EvalReport {
        per_class,
        macro_precision,
        macro_recall,
        macro_f1,
        micro_precision,
        micro_recall,
        micro_f1: f1(micro_precision, micro_recall),
        n_instances: counts.n_instances,
        n_gold_labels: counts.n_gold_labels,
        run: BTreeMap::new(),
    }
}

/// Run a model head over a dataset and score it against the (possibly
/// multi-label) gold annotations.
pub fn evaluate_model(model: &Model, head_idx: usize, ds: &TaskDataset) -> Result<EvalReport> {
    let mut predictions = Vec::with_capacity(ds.len());
    let mut gold = Vec::with_capacity(ds.len());
    for inst in &ds.instances {
        predictions.push(model.predict_code(head_idx, &inst.tokens)?);
        gold.push(inst.labels.clone());
    }
    let counts = score(&predictions, &gold, ds.label_set)?;
    Ok(prf(&counts))
}
