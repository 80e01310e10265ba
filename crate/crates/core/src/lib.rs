//! Corpus curation and evaluation toolkit for Persian punctuation restoration.
//!
//! The crate covers the whole data path: text normalization, sentence
//! segmentation and quality filtering, exact deduplication, stratified
//! sampling and splitting, punctuation analytics, token-level labeling,
//! evaluation of restorer output, and a small averaged-perceptron baseline
//! restorer. [`pipeline`] wires the stages together behind a source manifest.

pub mod analytics;
pub mod baseline;
pub mod dedup;
pub mod error;
pub mod evaluator;
pub mod jsonl;
pub mod labeler;
pub mod marks;
pub mod normalizer;
pub mod pipeline;
pub mod rng;
pub mod round;
pub mod segmenter;
pub mod split;

pub use error::{Error, Result};
pub use marks::PunctuationMark;

/// Toolkit version recorded in every emitted manifest and model file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
