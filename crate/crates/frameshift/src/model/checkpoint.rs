//! Model checkpointing.
//!
//! A checkpoint is a single JSON file holding the run-config echo, the
//! vocabulary, the encoder/head layout, and every parameter tensor.
//! Serialization uses shortest-round-trip float formatting, so
//! save -> load -> save is byte-identical.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, SharedEncoder, TaskHead};
use crate::error::{Error, Result};
use crate::numcore::{ParamId, ParamStore};

const FORMAT: &str = "frameshift-checkpoint-v1";

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    run_config: BTreeMap<String, String>,
    vocab: Vec<String>,
    embedding: ParamId,
    unk_row: usize,
    encoder: SharedEncoder,
    heads: Vec<TaskHead>,
    params: ParamStore,
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = CheckpointFile {
        format: FORMAT.to_string(),
        run_config: model.run_config.clone(),
        vocab: model.vocab.clone(),
        embedding: model.embedding,
        unk_row: model.unk_row,
        encoder: model.encoder.clone(),
        heads: model.heads.clone(),
        params: model.params.clone(),
    };
    let out = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut writer = BufWriter::new(out);
    serde_json::to_writer(&mut writer, &file)?;
    writer
        .write_all(b"\n")
        .and_then(|_| writer.flush())
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let input = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: CheckpointFile = serde_json::from_reader(BufReader::new(input))?;
    if file.format != FORMAT {
        return Err(Error::Config(format!(
            "unsupported checkpoint format `{}` in {}",
            file.format,
            path.display()
        )));
    }
    let word_index = file
        .vocab
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();
    Ok(Model {
        params: file.params,
        vocab: file.vocab,
        word_index,
        embedding: file.embedding,
        unk_row: file.unk_row,
        encoder: file.encoder,
        heads: file.heads,
        run_config: file.run_config,
    })
}
