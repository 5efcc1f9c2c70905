//! Span-to-sentence annotation projection.
//!
//! Documents arrive with token-level span annotations that may cross
//! sentence boundaries. A sentence receives label `l` when some annotator
//! marked a span with label `l` that lies entirely within the sentence and
//! covers at least half of its tokens — and only if at least two distinct
//! annotators independently did so.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::tokenize;
use crate::data::{Domain, FrameLabel, Instance, Split};
use crate::error::{Error, Result};

/// One annotated span, in document token indices (start inclusive, end
/// exclusive).
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct SpanAnnotation {
    pub start: usize,
    pub end: usize,
    pub label: u32,
    pub annotator: String,
}

/// A tokenized document with sentence boundaries and span annotations.
#[derive(Debug, Clone, Deserialize)]
pub struct SpanDocument {
    pub doc_id: String,
    pub tokens: Vec<String>,
    /// Sentence boundaries as `[start, end)` token-index pairs.
    pub sentences: Vec<(usize, usize)>,
    pub spans: Vec<SpanAnnotation>,
}

impl SpanDocument {
    fn validate(&self) -> Result<()> {
        let len = self.tokens.len();
        for &(s, e) in &self.sentences {
            if s >= e || e > len {
                return Err(Error::Index(format!(
                    "doc `{}`: sentence [{s}, {e}) outside document of {len} tokens",
                    self.doc_id
                )));
            }
        }
        for span in &self.spans {
            if span.start >= span.end {
                return Err(Error::Index(format!(
                    "doc `{}`: empty span [{}, {})",
                    self.doc_id, span.start, span.end
                )));
            }
            if span.end > len {
                return Err(Error::Index(format!(
                    "doc `{}`: span [{}, {}) crosses document length {len}",
                    self.doc_id, span.start, span.end
                )));
            }
        }
        Ok(())
    }
}

/// Project span annotations onto sentences. Returns one instance per
/// sentence that received at least one label; labels outside the five
/// target frames are dropped.
pub fn project_spans(doc: &SpanDocument) -> Result<Vec<Instance>> {
    doc.validate()?;
    let mut out = Vec::new();
    for (si, &(s_start, s_end)) in doc.sentences.iter().enumerate() {
        let sent_len = s_end - s_start;
        // (label -> annotators with a qualifying span)
        let mut support: BTreeMap<u32, BTreeSet<&str>> = BTreeMap::new();
        for span in &doc.spans {
            let within = span.start >= s_start && span.end <= s_end;
            if !within {
                continue;
            }
            let coverage_ok = 2 * (span.end - span.start) >= sent_len;
            if coverage_ok {
                support
                    .entry(span.label)
                    .or_default()
                    .insert(span.annotator.as_str());
            }
        }
        let labels: BTreeSet<u32> = support
            .into_iter()
            .filter(|(label, annotators)| {
                annotators.len() >= 2 && FrameLabel::from_code(*label).is_ok()
            })
            .map(|(label, _)| label)
            .collect();
        if labels.is_empty() {
            continue;
        }
        let text = doc.tokens[s_start..s_end].join(" ");
        out.push(Instance {
            id: format!("{}-s{si}", doc.doc_id),
            tokens: tokenize(&text),
            text,
            labels,
            domain: Domain::News,
            split: Split::Train,
        });
    }
    Ok(out)
}

/// Read span-annotated documents from JSONL.
pub fn load_span_docs(path: impl AsRef<Path>) -> Result<Vec<SpanDocument>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut docs = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: SpanDocument = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            msg: e.to_string(),
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(spans: Vec<SpanAnnotation>) -> SpanDocument {
        SpanDocument {
            doc_id: "d0".into(),
            tokens: (0..10).map(|i| format!("tok{i}")).collect(),
            sentences: vec![(0, 10)],
            spans,
        }
    }

    fn span(start: usize, end: usize, label: u32, annotator: &str) -> SpanAnnotation {
        SpanAnnotation {
            start,
            end,
            label,
            annotator: annotator.into(),
        }
    }

    #[test]
    fn half_coverage_with_two_annotators_labels_the_sentence() {
        // 5 of 10 tokens is exactly the 50% boundary.
        let d = doc(vec![span(0, 5, 5, "a"), span(0, 5, 5, "b")]);
        let out = project_spans(&d).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].labels, BTreeSet::from([5]));
    }

    #[test]
    fn below_half_coverage_is_dropped() {
        let d = doc(vec![span(0, 4, 5, "a"), span(0, 4, 5, "b")]);
        assert!(project_spans(&d).unwrap().is_empty());
    }

    #[test]
    fn single_annotator_is_dropped() {
        let d = doc(vec![span(0, 10, 5, "a")]);
        assert!(project_spans(&d).unwrap().is_empty());
    }

    #[test]
    fn same_annotator_twice_does_not_count_as_two() {
        let d = doc(vec![span(0, 10, 5, "a"), span(0, 6, 5, "a")]);
        assert!(project_spans(&d).unwrap().is_empty());
    }

    #[test]
    fn span_crossing_sentence_boundary_is_excluded() {
        let d = SpanDocument {
            doc_id: "d1".into(),
            tokens: (0..10).map(|i| format!("tok{i}")).collect(),
            sentences: vec![(0, 5), (5, 10)],
            spans: vec![span(3, 8, 5, "a"), span(3, 8, 5, "b")],
        };
        assert!(project_spans(&d).unwrap().is_empty());
    }

    #[test]
    fn span_crossing_document_length_is_an_index_error() {
        let d = doc(vec![span(0, 11, 5, "a")]);
        assert!(matches!(project_spans(&d), Err(Error::Index(_))));
    }

    #[test]
    fn non_target_labels_are_filtered() {
        let d = doc(vec![span(0, 10, 9, "a"), span(0, 10, 9, "b")]);
        assert!(project_spans(&d).unwrap().is_empty());
    }

    #[test]
    fn projected_labels_satisfy_the_predicate_when_rechecked() {
        let d = SpanDocument {
            doc_id: "d2".into(),
            tokens: (0..20).map(|i| format!("tok{i}")).collect(),
            sentences: vec![(0, 8), (8, 20)],
            spans: vec![
                span(0, 8, 5, "a"),
                span(0, 4, 5, "b"),
                span(2, 8, 5, "c"),
                span(8, 20, 7, "a"),
                span(10, 18, 7, "b"),
                span(9, 12, 7, "c"),
            ],
        };
        let out = project_spans(&d).unwrap();
        assert_eq!(out.len(), 2);
        for inst in &out {
            for &label in &inst.labels {
                // Independent recheck of the 50%/2-annotator rule.
                let (s_start, s_end) = if inst.id.ends_with("s0") { (0, 8) } else { (8, 20) };
                let annotators: BTreeSet<&str> = d
                    .spans
                    .iter()
                    .filter(|sp| {
                        sp.label == label
                            && sp.start >= s_start
                            && sp.end <= s_end
                            && 2 * (sp.end - sp.start) >= s_end - s_start
                    })
                    .map(|sp| sp.annotator.as_str())
                    .collect();
                assert!(annotators.len() >= 2);
                assert!(FrameLabel::from_code(label).is_ok());
            }
        }
    }
}
