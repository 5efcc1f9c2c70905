//! Argument-quality annotations: binarization and dataset balancing.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::data::TaskDataset;
use crate::error::{Error, Result};
use crate::numcore::Rng;

/// Crowd-sourced quality ratings for one sentence: seven slider scores in
/// `[0, 1]`.
#[derive(Debug, Clone, Deserialize)]
pub struct QualityAnnotation {
    pub sentence_id: String,
    pub text: String,
    pub scores: Vec<f64>,
}

/// Binarize a quality annotation: mean of the seven scores, thresholded at
/// 0.5 (inclusive).
pub fn binarize_quality(q: &QualityAnnotation) -> Result<u32> {
    if q.scores.len() != 7 {
        return Err(Error::Annotation(format!(
            "sentence `{}` has {} scores, expected 7",
            q.sentence_id,
            q.scores.len()
        )));
    }
    if q.scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::Annotation(format!(
            "sentence `{}` has a score outside [0, 1]",
            q.sentence_id
        )));
    }
    let mean = q.scores.iter().sum::<f64>() / 7.0;
    Ok(if mean >= 0.5 { 1 } else { 0 })
}

/// Downsample the majority class of a binary dataset until its count is at
/// most `floor(1.05 * minority)`. Sampling is uniform without replacement;
/// the minority class is never touched and no instance is duplicated.
pub fn balance_binary(ds: &TaskDataset, rng: &mut Rng) -> Result<TaskDataset> {
    let single = |inst: &crate::data::Instance| -> Result<u32> {
        let mut it = inst.labels.iter();
        match (it.next(), it.next()) {
            (Some(&l), None) => Ok(l),
            _ => Err(Error::Balance(format!(
                "instance `{}` is not single-label",
                inst.id
            ))),
        }
    };

    let mut zeros = Vec::new();
    let mut ones = Vec::new();
    for (i, inst) in ds.instances.iter().enumerate() {
        match single(inst)? {
            0 => zeros.push(i),
            1 => ones.push(i),
            other => {
                return Err(Error::Balance(format!(
                    "label {other} in a binary dataset"
                )))
            }
        }
    }
    if zeros.is_empty() || ones.is_empty() {
        return Err(Error::Balance(format!(
            "cannot balance: class counts are ({}, {})",
            zeros.len(),
            ones.len()
        )));
    }

    let (minority, majority) = if zeros.len() <= ones.len() {
        (zeros, ones)
    } else {
        (ones, zeros)
    };
    let cap = (minority.len() as f64 * 1.05).floor() as usize;
    let kept_majority: Vec<usize> = if majority.len() <= cap {
        majority
    } else {
        rng.sample_indices(majority.len(), cap)
            .into_iter()
            .map(|i| majority[i])
            .collect()
    };

    // Preserve original corpus order.
    let mut keep: Vec<usize> = minority.into_iter().chain(kept_majority).collect();
    keep.sort_unstable();
    let instances = keep.into_iter().map(|i| ds.instances[i].clone()).collect();
    TaskDataset::new(ds.task.clone(), ds.label_set, instances)
}

/// Read quality annotations from JSONL
/// (`{"sentence_id": ..., "text": ..., "scores": [7 floats]}`).
pub fn load_quality_annotations(path: impl AsRef<Path>) -> Result<Vec<QualityAnnotation>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let q: QualityAnnotation = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            msg: e.to_string(),
        })?;
        out.push(q);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Domain, Instance, LabelSet, Split};
    use std::collections::BTreeSet;

    fn q(scores: &[f64]) -> QualityAnnotation {
        QualityAnnotation {
            sentence_id: "s".into(),
            text: "t".into(),
            scores: scores.to_vec(),
        }
    }

    #[test]
    fn threshold_is_inclusive() {
        assert_eq!(binarize_quality(&q(&[0.5; 7])).unwrap(), 1);
    }

    #[test]
    fn just_below_threshold_is_zero() {
        assert_eq!(binarize_quality(&q(&[0.49; 7])).unwrap(), 0);
    }

    #[test]
    fn mean_then_threshold() {
        // mean = (3*0.9 + 4*0.1) / 7 = 3.1/7 ~ 0.4429
        assert_eq!(
            binarize_quality(&q(&[0.9, 0.9, 0.9, 0.1, 0.1, 0.1, 0.1])).unwrap(),
            0
        );
    }

    #[test]
    fn wrong_score_count_is_an_annotation_error() {
        assert!(matches!(
            binarize_quality(&q(&[0.5; 6])),
            Err(Error::Annotation(_))
        ));
    }

    fn binary_ds(zeros: usize, ones: usize) -> TaskDataset {
        let mut instances = Vec::new();
        for i in 0..zeros {
            instances.push(Instance {
                id: format!("z{i}"),
                text: "w".into(),
                tokens: vec!["w".into()],
                labels: BTreeSet::from([0]),
                domain: Domain::OnlineDisc,
                split: Split::Train,
            });
        }
        for i in 0..ones {
            instances.push(Instance {
                id: format!("o{i}"),
                text: "w".into(),
                tokens: vec!["w".into()],
                labels: BTreeSet::from([1]),
                domain: Domain::OnlineDisc,
                split: Split::Train,
            });
        }
        TaskDataset::new("quality", LabelSet::Quality, instances).unwrap()
    }

    fn counts(ds: &TaskDataset) -> (usize, usize) {
        let stats = ds.stats();
        (stats.class_counts[&0], stats.class_counts[&1])
    }

    #[test]
    fn downsamples_majority_to_within_five_percent() {
        let ds = binary_ds(1350, 2435);
        let balanced = balance_binary(&ds, &mut Rng::from_seed(1)).unwrap();
        let (zeros, ones) = counts(&balanced);
        assert_eq!(zeros, 1350);
        assert!(ones <= (1350.0 * 1.05) as usize, "ones = {ones}");
        assert!(ones >= 1350, "majority cannot fall below minority: {ones}");
    }

    #[test]
    fn already_balanced_is_identity() {
        let ds = binary_ds(100, 100);
        let balanced = balance_binary(&ds, &mut Rng::from_seed(2)).unwrap();
        assert_eq!(balanced.instances, ds.instances);
    }

    #[test]
    fn missing_class_is_a_balance_error() {
        let ds = binary_ds(10, 0);
        assert!(matches!(
            balance_binary(&ds, &mut Rng::from_seed(3)),
            Err(Error::Balance(_))
        ));
    }

    #[test]
    fn never_duplicates_and_never_touches_minority() {
        let ds = binary_ds(40, 120);
        let balanced = balance_binary(&ds, &mut Rng::from_seed(4)).unwrap();
        let mut ids: Vec<&str> = balanced.instances.iter().map(|i| i.id.as_str()).collect();
        let before = ids.len();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), before, "duplicated instances");
        let (zeros, _) = counts(&balanced);
        assert_eq!(zeros, 40);
        // Every original minority instance survives.
        for i in 0..40 {
            assert!(balanced.instances.iter().any(|x| x.id == format!("z{i}")));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let ds = binary_ds(50, 200);
        let a = balance_binary(&ds, &mut Rng::from_seed(9)).unwrap();
        let b = balance_binary(&ds, &mut Rng::from_seed(9)).unwrap();
        assert_eq!(a.instances, b.instances);
    }
}
