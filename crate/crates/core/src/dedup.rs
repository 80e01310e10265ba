//! Exact deduplication over SHA-256 digests of a canonical sentence form.
//!
//! Only the 32-byte digests are kept in the seen-set, never the texts, so the
//! memory cost is bounded by the number of distinct sentences: roughly 32
//! bytes of key plus hash-table overhead per entry, about 0.7 GB at 20M keys.

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::normalizer::normalize_whitespace;
use crate::segmenter::Sentence;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DedupKey(pub [u8; 32]);

impl DedupKey {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for DedupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DedupKey({})", self.to_hex())
    }
}

impl fmt::Display for DedupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for DedupKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

/// Lowercased, whitespace-collapsed form that gets hashed.
pub fn canonical_form(text: &str) -> String {
    normalize_whitespace(text).to_lowercase()
}

pub fn canonical_key(text: &str) -> DedupKey {
    let digest = Sha256::digest(canonical_form(text).as_bytes());
    DedupKey(digest.into())
}

/// First-wins seen-set for streaming use.
#[derive(Debug, Default)]
pub struct Deduplicator {
    seen: HashSet<DedupKey>,
}

impl Deduplicator {
    pub fn new() -> Self {
        Self::default()
    }

    /// True if `key` had not been seen before (the item survives).
    pub fn insert(&mut self, key: DedupKey) -> bool {
        self.seen.insert(key)
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}

/// Keeps the first occurrence of every canonical key, preserving order.
/// Digests are computed in parallel; the keep/drop pass is sequential so the
/// result matches a single-threaded run exactly.
pub fn deduplicate(sentences: Vec<Sentence>) -> Vec<Sentence> {
    let keys: Vec<DedupKey> = sentences.par_iter().map(|s| canonical_key(&s.text)).collect();
    let mut seen = Deduplicator::new();
    sentences
        .into_iter()
        .zip(keys)
        .filter_map(|(s, k)| seen.insert(k).then_some(s))
        .collect()
}
