//! JSONL corpus I/O.
//!
//! One object per line: `{"id": ..., "text": ..., "labels": [...],
//! "domain": "news"|"twitter"|"online_disc", "split": "train"|"dev"|"test"}`.
//! Labels may be integer codes or canonical frame names.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Domain, FrameLabel, Instance, LabelSet, Split, TaskDataset};
use crate::error::{Error, Result};
use crate::preprocess::tokenize;

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    text: String,
    #[serde(default)]
    labels: Vec<Value>,
    domain: Domain,
    split: Split,
}

fn parse_label(v: &Value, label_set: LabelSet) -> Result<u32> {
    match v {
        Value::Number(n) => n
            .as_u64()
            .map(|c| c as u32)
            .ok_or_else(|| Error::Label(format!("label {n} is not a non-negative integer"))),
        Value::String(s) => {
            if label_set == LabelSet::Frames {
                FrameLabel::from_name(s).map(|f| f.code)
            } else {
                s.parse::<u32>()
                    .map_err(|_| Error::Label(format!("label `{s}` is not an integer code")))
            }
        }
        other => Err(Error::Label(format!("label {other} has unsupported type"))),
    }
}

fn read_records(path: &Path) -> Result<Vec<(usize, Record)>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            msg: e.to_string(),
        })?;
        records.push((idx + 1, record));
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset(path.display().to_string()));
    }
    Ok(records)
}

fn build_instance(path: &Path, line: usize, record: Record, labels: BTreeSet<u32>) -> Result<Instance> {
    let tokens = tokenize(&record.text);
    if tokens.is_empty() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line,
            msg: format!("instance `{}` has no tokens after tokenization", record.id),
        });
    }
    Ok(Instance {
        id: record.id,
        text: record.text,
        tokens,
        labels,
        domain: record.domain,
        split: record.split,
    })
}

/// Load a supervised corpus, validating every label against `label_set`.
/// Instances are tokenized on load; empty-token instances are rejected.
pub fn load_corpus(path: impl AsRef<Path>, task: &str, label_set: LabelSet) -> Result<TaskDataset> {
    let path = path.as_ref();
    let mut instances = Vec::new();
    for (line, record) in read_records(path)? {
        if record.labels.is_empty() {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line,
                msg: format!("instance `{}` has no labels", record.id),
            });
        }
        let mut labels = BTreeSet::new();
        for v in &record.labels {
            let code = parse_label(v, label_set).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line,
                msg: e.to_string(),
            })?;
            if !label_set.contains(code) {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line,
                    msg: format!("label {code} outside label set {label_set:?}"),
                });
            }
            labels.insert(code);
        }
        instances.push(build_instance(path, line, record, labels)?);
    }
    TaskDataset::new(task, label_set, instances)
}

/// Load a corpus ignoring any labels (used for the unlabeled target-domain
/// data consumed by the adversarial task).
pub fn load_unlabeled(path: impl AsRef<Path>, task: &str) -> Result<TaskDataset> {
    let path = path.as_ref();
    let mut instances = Vec::new();
    for (line, record) in read_records(path)? {
        let mut inst = build_instance(path, line, record, BTreeSet::new())?;
        // Carries the target-domain code so the dataset is usable directly.
        inst.labels = BTreeSet::from([1]);
        instances.push(inst);
    }
    TaskDataset::new(task, LabelSet::Domain, instances)
}

/// Write a dataset back to JSONL. `load_corpus(save_corpus(ds))` is the
/// identity on the data model.
pub fn save_corpus(ds: &TaskDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut writer = BufWriter::new(file);
    for inst in &ds.instances {
        let record = Record {
            id: inst.id.clone(),
            text: inst.text.clone(),
            labels: inst.labels.iter().map(|&l| Value::from(l)).collect(),
            domain: inst.domain,
            split: inst.split,
        };
        serde_json::to_writer(&mut writer, &record)?;
        writer
            .write_all(b"\n")
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(path.display().to_string(), e))
}
