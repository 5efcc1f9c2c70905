//! Corpus data model: label sets, instances, datasets, batching, on-disk
//! formats, and the synthetic domain-shift generator.

mod batching;
mod corpus;
mod synth;

pub use batching::{batches, CyclingBatcher};
pub use corpus::{load_corpus, load_unlabeled, save_corpus};
pub use synth::{synth_generate, SynthCorpora, SynthSpec};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five issue-frame classes, identified by their codebook codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrameLabel {
    pub code: u32,
}

impl FrameLabel {
    pub const CODES: [u32; 5] = [1, 5, 6, 7, 13];

    pub fn from_code(code: u32) -> Result<Self> {
        if Self::CODES.contains(&code) {
            Ok(FrameLabel { code })
        } else {
            Err(Error::Label(format!("unknown frame code {code}")))
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        let code = match name {
            "Economic" => 1,
            "Legality/Jurisprudence/Constitutionality" => 5,
            "Policy-prescription-and-evaluation" => 6,
            "Crime-and-Punishment" => 7,
            "Political" => 13,
            _ => return Err(Error::Label(format!("unknown frame name `{name}`"))),
        };
        Ok(FrameLabel { code })
    }

    pub fn name(&self) -> &'static str {
        match self.code {
            1 => "Economic",
            5 => "Legality/Jurisprudence/Constitutionality",
            6 => "Policy-prescription-and-evaluation",
            7 => "Crime-and-Punishment",
            13 => "Political",
            _ => unreachable!("invalid frame code"),
        }
    }
}

/// Which corpus family an instance comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    News,
    Twitter,
    OnlineDisc,
}

impl Domain {
    pub fn as_str(&self) -> &'static str {
        match self {
            Domain::News => "news",
            Domain::Twitter => "twitter",
            Domain::OnlineDisc => "online_disc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// Label universe of a task. Codes are listed in ascending order, which
/// also fixes the head's output index order and the argmax tie-break
/// (lowest code wins).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSet {
    /// Issue frames {1, 5, 6, 7, 13}.
    Frames,
    /// Argument quality {0, 1}.
    Quality,
    /// Domain discrimination {0 = source, 1 = target}.
    Domain,
}

impl LabelSet {
    pub fn codes(&self) -> &'static [u32] {
        match self {
            LabelSet::Frames => &FrameLabel::CODES,
            LabelSet::Quality => &[0, 1],
            LabelSet::Domain => &[0, 1],
        }
    }

    pub fn contains(&self, code: u32) -> bool {
        self.codes().contains(&code)
    }

    /// Position of `code` in the head's output vector.
    pub fn index_of(&self, code: u32) -> Result<usize> {
        self.codes()
            .iter()
            .position(|&c| c == code)
            .ok_or_else(|| Error::Label(format!("label {code} outside label set {self:?}")))
    }

    pub fn class_name(&self, code: u32) -> String {
        match self {
            LabelSet::Frames => FrameLabel::from_code(code)
                .map(|f| f.name().to_string())
                .unwrap_or_else(|_| code.to_string()),
            LabelSet::Quality => code.to_string(),
            LabelSet::Domain => match code {
                0 => "source".into(),
                1 => "target".into(),
                _ => code.to_string(),
            },
        }
    }
}

/// One text sequence with its gold labels, domain and split tags. `tokens`
/// is filled by the tokenizer at load time.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
    pub labels: BTreeSet<u32>,
    pub domain: Domain,
    pub split: Split,
}

/// Per-class and aggregate statistics of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub instances: usize,
    pub class_counts: BTreeMap<u32, usize>,
    pub multi_label: usize,
}

/// A named task: a label set plus the instances carrying it.
#[derive(Debug, Clone)]
pub struct TaskDataset {
    pub task: String,
    pub label_set: LabelSet,
    pub instances: Vec<Instance>,
}

impl TaskDataset {
    pub fn new(task: impl Into<String>, label_set: LabelSet, instances: Vec<Instance>) -> Result<Self> {
        let ds = TaskDataset {
            task: task.into(),
            label_set,
            instances,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        for inst in &self.instances {
            for &l in &inst.labels {
                if !self.label_set.contains(l) {
                    return Err(Error::Label(format!(
                        "instance `{}`: label {} outside label set {:?}",
                        inst.id, l, self.label_set
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn stats(&self) -> DatasetStats {
        let mut class_counts: BTreeMap<u32, usize> = BTreeMap::new();
        for &c in self.label_set.codes() {
            class_counts.insert(c, 0);
        }
        let mut multi_label = 0;
        for inst in &self.instances {
            if inst.labels.len() > 1 {
                multi_label += 1;
            }
            for &l in &inst.labels {
                *class_counts.entry(l).or_insert(0) += 1;
            }
        }
        DatasetStats {
            instances: self.instances.len(),
            class_counts,
            multi_label,
        }
    }

    /// Instances restricted to one split, same task and label set.
    pub fn filter_split(&self, split: Split) -> TaskDataset {
        TaskDataset {
            task: self.task.clone(),
            label_set: self.label_set,
            instances: self
                .instances
                .iter()
                .filter(|i| i.split == split)
                .cloned()
                .collect(),
        }
    }
}

/// Expand multi-label instances into one single-label copy per label. The
/// copies share the original id, so the multiset of (id, label) pairs is
/// preserved exactly.
pub fn expand_multilabel(ds: &TaskDataset) -> TaskDataset {
    let mut out = Vec::with_capacity(ds.instances.len());
    for inst in &ds.instances {
        for &label in &inst.labels {
            let mut copy = inst.clone();
            copy.labels = BTreeSet::from([label]);
            out.push(copy);
        }
    }
    TaskDataset {
        task: ds.task.clone(),
        label_set: ds.label_set,
        instances: out,
    }
}

/// References into a [`TaskDataset`] forming one training batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub indices: Vec<usize>,
    pub max_len: usize,
    pub lengths: Vec<usize>,
}

impl Batch {
    pub fn from_indices(ds: &TaskDataset, indices: Vec<usize>) -> Self {
        let lengths: Vec<usize> = indices.iter().map(|&i| ds.instances[i].tokens.len()).collect();
        let max_len = lengths.iter().copied().max().unwrap_or(0);
        Batch {
            indices,
            max_len,
            lengths,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(id: &str, labels: &[u32]) -> Instance {
        Instance {
            id: id.into(),
            text: "a b".into(),
            tokens: vec!["a".into(), "b".into()],
            labels: labels.iter().copied().collect(),
            domain: Domain::News,
            split: Split::Train,
        }
    }

    #[test]
    fn frame_label_bijection() {
        for &code in &FrameLabel::CODES {
            let label = FrameLabel::from_code(code).unwrap();
            assert_eq!(FrameLabel::from_name(label.name()).unwrap().code, code);
        }
        assert!(FrameLabel::from_code(2).is_err());
        assert_eq!(FrameLabel::from_code(5).unwrap().name(), "Legality/Jurisprudence/Constitutionality");
    }

    #[test]
    fn expand_splits_multilabel_instance() {
        let ds = TaskDataset::new("frames", LabelSet::Frames, vec![inst("a", &[5, 7])]).unwrap();
        let out = expand_multilabel(&ds);
        assert_eq!(out.len(), 2);
        assert_eq!(out.instances[0].labels, BTreeSet::from([5]));
        assert_eq!(out.instances[1].labels, BTreeSet::from([7]));
        assert!(out.instances.iter().all(|i| i.id == "a"));
    }

    #[test]
    fn expand_is_identity_on_single_label_data() {
        let ds = TaskDataset::new(
            "frames",
            LabelSet::Frames,
            vec![inst("a", &[1]), inst("b", &[13])],
        )
        .unwrap();
        assert_eq!(expand_multilabel(&ds).len(), ds.len());
    }

    #[test]
    fn label_outside_set_is_rejected() {
        let err = TaskDataset::new("q", LabelSet::Quality, vec![inst("a", &[5])]).unwrap_err();
        assert!(matches!(err, Error::Label(_)));
    }

    #[test]
    fn stats_count_labels_and_multis() {
        let ds = TaskDataset::new(
            "frames",
            LabelSet::Frames,
            vec![inst("a", &[5, 7]), inst("b", &[5]), inst("c", &[1])],
        )
        .unwrap();
        let stats = ds.stats();
        assert_eq!(stats.instances, 3);
        assert_eq!(stats.multi_label, 1);
        assert_eq!(stats.class_counts[&5], 2);
        assert_eq!(stats.class_counts[&7], 1);
        assert_eq!(stats.class_counts[&13], 0);
    }

    #[test]
    fn index_of_orders_codes_ascending() {
        assert_eq!(LabelSet::Frames.index_of(1).unwrap(), 0);
        assert_eq!(LabelSet::Frames.index_of(13).unwrap(), 4);
        assert!(LabelSet::Frames.index_of(2).is_err());
    }
}
