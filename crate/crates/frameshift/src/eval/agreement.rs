//! Inter-annotator agreement: Cohen's kappa and agreement expressed as
//! macro-averaged F-score with either annotation taken as gold.

use std::collections::{BTreeMap, BTreeSet};

use super::metrics::{prf, score};
use crate::data::LabelSet;
use crate::error::{Error, Result};

/// Cohen's kappa between two aligned single-label annotation sequences:
/// `(p_o - p_e) / (1 - p_e)` with `p_e` from each annotator's marginal
/// label frequencies.
pub fn cohen_kappa(labels_a: &[u32], labels_b: &[u32]) -> Result<f64> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::Alignment(format!(
            "{} vs {} annotations",
            labels_a.len(),
            labels_b.len()
        )));
    }
    if labels_a.is_empty() {
        return Err(Error::Alignment("no annotations".into()));
    }
    let n = labels_a.len() as f64;
    let observed = labels_a
        .iter()
        .zip(labels_b)
        .filter(|(a, b)| a == b)
        .count() as f64
        / n;

    let mut freq_a: BTreeMap<u32, f64> = BTreeMap::new();
    let mut freq_b: BTreeMap<u32, f64> = BTreeMap::new();
    for (&a, &b) in labels_a.iter().zip(labels_b) {
        *freq_a.entry(a).or_insert(0.0) += 1.0 / n;
        *freq_b.entry(b).or_insert(0.0) += 1.0 / n;
    }
    let expected: f64 = freq_a
        .iter()
        .filter_map(|(label, pa)| freq_b.get(label).map(|pb| pa * pb))
        .sum();

    if expected >= 1.0 {
        return Err(Error::UndefinedKappa);
    }
    Ok((observed - expected) / (1.0 - expected))
}

/// Agreement as macro-averaged F-score in both directions: first treating
/// `labels_a` as gold, then `labels_b`.
pub fn agreement_macro_f(
    labels_a: &[u32],
    labels_b: &[u32],
    label_set: LabelSet,
) -> Result<(f64, f64)> {
    let as_sets = |labels: &[u32]| -> Vec<BTreeSet<u32>> {
        labels.iter().map(|&l| BTreeSet::from([l])).collect()
    };
    let a_gold = prf(&score(labels_b, &as_sets(labels_a), label_set)?);
    let b_gold = prf(&score(labels_a, &as_sets(labels_b), label_set)?);
    Ok((a_gold.macro_f1, b_gold.macro_f1))
}
