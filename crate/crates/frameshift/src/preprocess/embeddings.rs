//! Pretrained word-embedding loading.
//!
//! The on-disk format is the common text layout: one entry per line,
//! `word v1 v2 ... vD` with space-separated decimal floats. The embedding
//! dimension is fixed by the first line.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numcore::Rng;

/// A frozen word-vector table. Out-of-vocabulary words map to the UNK
/// vector, the componentwise mean of every vector in the source file.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<Vec<f64>>,
    unk: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(words: Vec<String>, vectors: Vec<Vec<f64>>, unk: Vec<f64>) -> Self {
        debug_assert_eq!(words.len(), vectors.len());
        let dim = unk.len();
        debug_assert!(vectors.iter().all(|v| v.len() == dim));
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        EmbeddingTable {
            dim,
            words,
            index,
            vectors,
            unk,
        }
    }

    /// Random table for corpora without pretrained vectors: entries uniform
    /// in [-0.5, 0.5], UNK the mean of all vectors. `words` should be the
    /// sorted corpus vocabulary so the layout is deterministic.
    pub fn random(words: Vec<String>, dim: usize, rng: &mut Rng) -> Self {
        let vectors: Vec<Vec<f64>> = words
            .iter()
            .map(|_| (0..dim).map(|_| rng.uniform(-0.5, 0.5)).collect())
            .collect();
        let unk = mean_vector(&vectors, dim);
        EmbeddingTable::new(words, vectors, unk)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn unk(&self) -> &[f64] {
        &self.unk
    }

    pub fn vector_at(&self, idx: usize) -> &[f64] {
        &self.vectors[idx]
    }

    /// Vector for `word`, falling back to UNK.
    pub fn lookup(&self, word: &str) -> &[f64] {
        match self.index.get(word) {
            Some(&i) => &self.vectors[i],
            None => &self.unk,
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }
}

fn mean_vector(vectors: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut unk = vec![0.0; dim];
    if vectors.is_empty() {
        return unk;
    }
    for v in vectors {
        for (u, x) in unk.iter_mut().zip(v) {
            *u += x;
        }
    }
    for u in &mut unk {
        *u /= vectors.len() as f64;
    }
    unk
}

/// Load embeddings from a text file, keeping only words in `vocab`. The
/// UNK vector is the mean over all vectors in the file, not just the kept
/// ones, so it does not depend on the corpus.
pub fn load_embeddings(path: impl AsRef<Path>, vocab: &[String]) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let wanted: std::collections::HashSet<&str> = vocab.iter().map(|s| s.as_str()).collect();

    let mut dim: Option<usize> = None;
    let mut words = Vec::new();
    let mut vectors = Vec::new();
    let mut sum: Vec<f64> = Vec::new();
    let mut total = 0usize;

    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            msg: "missing word".into(),
        })?;
        let values: Vec<f64> = parts
            .map(|p| {
                p.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.display().to_string(),
                    line: idx + 1,
                    msg: format!("bad float `{p}`"),
                })
            })
            .collect::<Result<_>>()?;
        match dim {
            None => {
                if values.is_empty() {
                    return Err(Error::Parse {
                        path: path.display().to_string(),
                        line: idx + 1,
                        msg: "entry has no vector components".into(),
                    });
                }
                dim = Some(values.len());
                sum = vec![0.0; values.len()];
            }
            Some(d) if d != values.len() => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: idx + 1,
                    msg: format!("dimension {} does not match file dimension {d}", values.len()),
                });
            }
            _ => {}
        }
        for (s, v) in sum.iter_mut().zip(&values) {
            *s += v;
        }
        total += 1;
        if wanted.contains(word) {
            words.push(word.to_string());
            vectors.push(values);
        }
    }

    if dim.is_none() {
        return Err(Error::EmptyDataset(path.display().to_string()));
    }
    let unk: Vec<f64> = sum.iter().map(|s| s / total as f64).collect();
    Ok(EmbeddingTable::new(words, vectors, unk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn file(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn loads_known_word_vector() {
        let f = file(&["court 1.0 2.0 3.0", "gun 4.0 5.0 6.0"]);
        let table = load_embeddings(f.path(), &["court".into(), "gun".into()]).unwrap();
        assert_eq!(table.dim, 3);
        assert_eq!(table.lookup("court"), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn oov_maps_to_mean_of_all_loaded_vectors() {
        let f = file(&["court 1.0 2.0 3.0", "gun 4.0 5.0 6.0"]);
        let table = load_embeddings(f.path(), &["court".into()]).unwrap();
        assert_eq!(table.lookup("zebra"), &[2.5, 3.5, 4.5]);
        assert!(!table.contains("zebra"));
        assert!(!table.contains("gun"), "filtered by vocab");
    }

    #[test]
    fn inconsistent_dimension_reports_line_number() {
        let f = file(&["a 1.0 2.0 3.0", "b 1.0 2.0"]);
        let err = load_embeddings(f.path(), &["a".into()]).unwrap_err();
        match err {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("dimension"), "{msg}");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn random_table_is_deterministic() {
        let words = vec!["a".into(), "b".into(), "c".into()];
        let t1 = EmbeddingTable::random(words.clone(), 4, &mut Rng::from_seed(5));
        let t2 = EmbeddingTable::random(words, 4, &mut Rng::from_seed(5));
        assert_eq!(t1.lookup("b"), t2.lookup("b"));
        assert_eq!(t1.unk(), t2.unk());
    }
}
