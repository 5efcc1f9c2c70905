//! Issue-frame classification under domain shift.
//!
//! A self-contained implementation of a shared-encoder LSTM text classifier
//! trained with multi-task hard parameter sharing and adversarial domain
//! adaptation (gradient reversal), together with the surrounding machinery:
//! corpus formats, preprocessing, a weighted coin-flip task scheduler,
//! early-stopped training with a multi-seed selection protocol, evaluation
//! metrics, agreement statistics, and desk-scale synthetic corpora for
//! verifying the whole pipeline.
//!
//! The crate is organized as:
//!
//! * [`numcore`] — dense tensors, deterministic RNG, gradient tape, SGD,
//!   finite-difference gradient checking.
//! * [`data`] — corpus data model, JSONL I/O, batching, synthetic
//!   domain-shift corpus generation.
//! * [`preprocess`] — tokenization, span-to-sentence projection, tweet
//!   cleaning, quality binarization/balancing, embedding loading.
//! * [`model`] — frozen-embedding input layer, stacked LSTM encoder,
//!   per-task softmax heads, gradient reversal.
//! * [`train`] — task scheduling, epoch loop, early stopping, coin-weight
//!   grid search, multi-seed aggregation.
//! * [`eval`] — precision/recall/F metrics, inter-annotator agreement,
//!   random/majority and tf-idf softmax-regression baselines.

pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod numcore;
pub mod preprocess;
pub mod train;

pub use error::{Error, Result};
