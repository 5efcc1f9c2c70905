//! Synthetic domain-shifted corpora.
//!
//! Texts are drawn from class-conditional unigram mixtures that are shared
//! between the source and target domains; each domain then injects its own
//! marker tokens at a rate controlled by `shift`. The result is a
//! controllable covariate shift: at `shift = 0` the domains are identical,
//! at `shift = 1` every sentence carries domain markers.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Domain, FrameLabel, Instance, LabelSet, Split, TaskDataset};
use crate::error::{Error, Result};
use crate::numcore::Rng;

const MIN_LEN: usize = 5;
const MAX_LEN: usize = 20;
/// Fraction of a fully shifted sentence occupied by domain markers.
const MARKER_RATE: f64 = 0.25;
/// Probability that a content token comes from the class's own keyword
/// block rather than the shared background vocabulary.
const IN_CLASS_PROB: f64 = 0.75;
const MARKERS_PER_DOMAIN: usize = 8;

/// Generator configuration. Loadable from a flat key-value text file with
/// keys `classes`, `per_class_count`, `vocab_size`, `shift`, `seed` and the
/// optional `target_dev_per_class`, `target_test_per_class`,
/// `unlabeled_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub classes: usize,
    pub per_class_count: usize,
    pub vocab_size: usize,
    pub shift: f64,
    pub seed: u64,
    pub target_dev_per_class: usize,
    pub target_test_per_class: usize,
    pub unlabeled_count: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            classes: 5,
            per_class_count: 200,
            vocab_size: 60,
            shift: 0.6,
            seed: 1,
            target_dev_per_class: 20,
            target_test_per_class: 40,
            unlabeled_count: 500,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 {
            return Err(Error::Config("synthetic spec has zero classes".into()));
        }
        if self.classes != 2 && self.classes != 5 {
            return Err(Error::Config(format!(
                "synthetic generator supports 2 or 5 classes, got {}",
                self.classes
            )));
        }
        if self.per_class_count == 0 {
            return Err(Error::Config("per_class_count must be positive".into()));
        }
        if self.vocab_size < self.classes {
            return Err(Error::Config(format!(
                "vocab_size {} smaller than class count {}",
                self.vocab_size, self.classes
            )));
        }
        if !(0.0..=1.0).contains(&self.shift) {
            return Err(Error::Config(format!(
                "shift must lie in [0, 1], got {}",
                self.shift
            )));
        }
        Ok(())
    }

    pub fn label_set(&self) -> LabelSet {
        if self.classes == 5 {
            LabelSet::Frames
        } else {
            LabelSet::Quality
        }
    }

    pub fn class_codes(&self) -> Vec<u32> {
        if self.classes == 5 {
            FrameLabel::CODES.to_vec()
        } else {
            vec![0, 1]
        }
    }

    /// Parse from flat `key = value` text. Unknown keys are rejected.
    pub fn from_file(path: impl AsRef<Path>) -> Result<SynthSpec> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut spec = SynthSpec::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |msg: String| Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                msg,
            };
            match key {
                "classes" => spec.classes = value.parse().map_err(|_| bad(format!("bad classes `{value}`")))?,
                "per_class_count" => spec.per_class_count = value.parse().map_err(|_| bad(format!("bad per_class_count `{value}`")))?,
                "vocab_size" => spec.vocab_size = value.parse().map_err(|_| bad(format!("bad vocab_size `{value}`")))?,
                "shift" => spec.shift = value.parse().map_err(|_| bad(format!("bad shift `{value}`")))?,
                "seed" => spec.seed = value.parse().map_err(|_| bad(format!("bad seed `{value}`")))?,
                "target_dev_per_class" => spec.target_dev_per_class = value.parse().map_err(|_| bad(format!("bad target_dev_per_class `{value}`")))?,
                "target_test_per_class" => spec.target_test_per_class = value.parse().map_err(|_| bad(format!("bad target_test_per_class `{value}`")))?,
                "unlabeled_count" => spec.unlabeled_count = value.parse().map_err(|_| bad(format!("bad unlabeled_count `{value}`")))?,
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// The three corpora of one synthetic experiment.
#[derive(Debug)]
pub struct SynthCorpora {
    /// Labeled source-domain training data.
    pub source: TaskDataset,
    /// Labeled target-domain data (dev + test splits).
    pub target: TaskDataset,
    /// Unlabeled target-domain data for the adversarial task.
    pub target_unlabeled: TaskDataset,
}

pub fn marker_token(domain: Domain, k: usize) -> String {
    match domain {
        Domain::OnlineDisc => format!("tgtmark{k}"),
        _ => format!("srcmark{k}"),
    }
}

fn keyword(i: usize) -> String {
    let mut s = String::new();
    write!(s, "kw{i:03}").unwrap();
    s
}

struct Generator {
    spec: SynthSpec,
    /// Keyword indices per class (contiguous blocks over the vocab).
    blocks: Vec<Vec<usize>>,
}

impl Generator {
    fn new(spec: SynthSpec) -> Self {
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); spec.classes];
        for i in 0..spec.vocab_size {
            blocks[i % spec.classes].push(i);
        }
        Generator { spec, blocks }
    }

    fn content_token(&self, class_idx: usize, rng: &mut Rng) -> String {
        if rng.next_f64() < IN_CLASS_PROB {
            let block = &self.blocks[class_idx];
            keyword(block[rng.below(block.len())])
        } else {
            keyword(rng.below(self.spec.vocab_size))
        }
    }

    fn sentence(&self, class_idx: usize, domain: Domain, rng: &mut Rng) -> Vec<String> {
        let len = MIN_LEN + rng.below(MAX_LEN - MIN_LEN + 1);
        let n_markers = if self.spec.shift == 0.0 {
            0
        } else {
            ((self.spec.shift * MARKER_RATE * len as f64).ceil() as usize).min(len - 1)
        };
        let mut tokens: Vec<String> = (0..len - n_markers)
            .map(|_| self.content_token(class_idx, rng))
            .collect();
        for _ in 0..n_markers {
            let tok = marker_token(domain, rng.below(MARKERS_PER_DOMAIN));
            let pos = rng.below(tokens.len() + 1);
            tokens.insert(pos, tok);
        }
        tokens
    }

    fn instance(
        &self,
        id: String,
        class_idx: usize,
        code: u32,
        domain: Domain,
        split: Split,
        rng: &mut Rng,
    ) -> Instance {
        let tokens = self.sentence(class_idx, domain, rng);
        Instance {
            id,
            text: tokens.join(" "),
            tokens,
            labels: BTreeSet::from([code]),
            domain,
            split,
        }
    }
}

/// Generate the source, labeled-target, and unlabeled-target corpora for
/// one experiment. Generation is fully determined by `spec.seed`; the
/// passed `rng` is only used when the caller wants to decouple the stream.
pub fn synth_generate(spec: &SynthSpec, rng: &mut Rng) -> Result<SynthCorpora> {
    spec.validate()?;
    let generator = Generator::new(spec.clone());
    let codes = spec.class_codes();
    let label_set = spec.label_set();

    let mut source = Vec::new();
    for (ci, &code) in codes.iter().enumerate() {
        for i in 0..spec.per_class_count {
            source.push(generator.instance(
                format!("src-c{code}-{i:04}"),
                ci,
                code,
                Domain::News,
                Split::Train,
                rng,
            ));
        }
    }

    let mut target = Vec::new();
    for (split, per_class, tag) in [
        (Split::Dev, spec.target_dev_per_class, "dev"),
        (Split::Test, spec.target_test_per_class, "test"),
    ] {
        for (ci, &code) in codes.iter().enumerate() {
            for i in 0..per_class {
                target.push(generator.instance(
                    format!("tgt-{tag}-c{code}-{i:04}"),
                    ci,
                    code,
                    Domain::OnlineDisc,
                    split,
                    rng,
                ));
            }
        }
    }

    let mut unlabeled = Vec::new();
    for i in 0..spec.unlabeled_count {
        let ci = i % spec.classes;
        let mut inst = generator.instance(
            format!("tgt-unlab-{i:04}"),
            ci,
            1,
            Domain::OnlineDisc,
            Split::Train,
            rng,
        );
        inst.labels = BTreeSet::from([1]);
        unlabeled.push(inst);
    }

    Ok(SynthCorpora {
        source: TaskDataset::new("frames-source", label_set, source)?,
        target: TaskDataset::new("frames-target", label_set, target)?,
        target_unlabeled: TaskDataset::new("domain-target", LabelSet::Domain, unlabeled)?,
    })
}
