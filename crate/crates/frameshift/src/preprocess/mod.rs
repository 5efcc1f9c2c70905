//! Preprocessing: tokenization, tweet cleaning, span-to-sentence annotation
//! projection, argument-quality binarization and balancing, and pretrained
//! embedding loading.

mod embeddings;
mod quality;
mod spans;
mod text;

pub use embeddings::{load_embeddings, EmbeddingTable};
pub use quality::{balance_binary, binarize_quality, load_quality_annotations, QualityAnnotation};
pub use spans::{load_span_docs, project_spans, SpanAnnotation, SpanDocument};
pub use text::{clean_tweet, tokenize};
