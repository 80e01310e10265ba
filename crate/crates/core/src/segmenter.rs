//! Sentence segmentation and the three-family sentence filter.
//!
//! Structural rules look at the fully normalized sentence, since that is the
//! form that gets emitted. Content and quality rules look at the sentence
//! after punctuation standardization and whitespace collapsing but before
//! character filtering, because character filtering deletes exactly the
//! evidence they need (`/`, `@`, emoji, bullets, symbols, non-ASCII Latin).
//! For input that is already normalized both views coincide.

use std::fmt;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::marks::{count_marks, is_target_mark, is_terminal_mark};
use crate::normalizer::{in_arabic_block, is_digit, normalize_whitespace, standardize_punctuation, Normalizer, ZWNJ};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    #[serde(default)]
    pub source_id: String,
    #[serde(default)]
    pub doc_index: u64,
    #[serde(default)]
    pub sent_index: u32,
    /// False for a trailing segment that ran out without a terminal mark.
    #[serde(default = "terminated_default")]
    pub terminated: bool,
}

fn terminated_default() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rule {
    MinLen,
    MinPunct,
    Termination,
    Url,
    Email,
    Handle,
    Emoji,
    SymbolRatio,
    MixedLang,
    RepeatPunct,
    Enum,
    Fragment,
}

impl Rule {
    pub const ALL: [Rule; 12] = [
        Rule::MinLen,
        Rule::MinPunct,
        Rule::Termination,
        Rule::Url,
        Rule::Email,
        Rule::Handle,
        Rule::Emoji,
        Rule::SymbolRatio,
        Rule::MixedLang,
        Rule::RepeatPunct,
        Rule::Enum,
        Rule::Fragment,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            Rule::MinLen => "MIN_LEN",
            Rule::MinPunct => "MIN_PUNCT",
            Rule::Termination => "TERMINATION",
            Rule::Url => "URL",
            Rule::Email => "EMAIL",
            Rule::Handle => "HANDLE",
            Rule::Emoji => "EMOJI",
            Rule::SymbolRatio => "SYMBOL_RATIO",
            Rule::MixedLang => "MIXED_LANG",
            Rule::RepeatPunct => "REPEAT_PUNCT",
            Rule::Enum => "ENUM",
            Rule::Fragment => "FRAGMENT",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub accepted: bool,
    pub failed_rules: Vec<Rule>,
}

impl FilterVerdict {
    fn from_rules(mut failed_rules: Vec<Rule>) -> Self {
        failed_rules.sort_unstable();
        failed_rules.dedup();
        FilterVerdict {
            accepted: failed_rules.is_empty(),
            failed_rules,
        }
    }

    pub fn union(self, other: FilterVerdict) -> FilterVerdict {
        let mut rules = self.failed_rules;
        rules.extend(other.failed_rules);
        FilterVerdict::from_rules(rules)
    }
}

/// Minimum sentence length in codepoints.
pub const MIN_LEN: usize = 10;
/// Minimum number of target marks per sentence.
pub const MIN_MARKS: usize = 2;

/// Splits a document into sentences.
///
/// A boundary follows every run of terminal marks (`.`, `!`, `؟`), except a
/// period between two digits (decimals) and a period that closes a bare
/// leading digit run (list enumerators such as `1.`), which stay attached so
/// the enumerator rule can see them. A trailing remainder without a terminal
/// mark is emitted with `terminated == false`.
pub fn segment(source_id: &str, doc_index: u64, text: &str) -> Vec<Sentence> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let push = |piece: &str, terminated: bool, out: &mut Vec<Sentence>| {
        let piece = piece.trim();
        if !piece.is_empty() {
            out.push(Sentence {
                text: piece.to_owned(),
                source_id: source_id.to_owned(),
                doc_index,
                sent_index: out.len() as u32,
                terminated,
            });
        }
    };
    for (k, &(pos, c)) in chars.iter().enumerate() {
        if !is_terminal_mark(c) {
            continue;
        }
        let prev = k.checked_sub(1).map(|j| chars[j].1);
        let next = chars.get(k + 1).map(|&(_, n)| n);
        if next.is_some_and(is_terminal_mark) {
            continue;
        }
        if c == '.' {
            if prev.is_some_and(is_digit) && next.is_some_and(is_digit) {
                continue;
            }
            let so_far = text[start..pos].trim();
            if !so_far.is_empty() && so_far.chars().all(is_digit) {
                continue;
            }
        }
        let end = pos + c.len_utf8();
        push(&text[start..end], true, &mut out);
        start = end;
    }
    push(&text[start..], false, &mut out);
    out
}

pub fn check_structural(text: &str) -> FilterVerdict {
    let mut failed = Vec::new();
    if text.chars().count() < MIN_LEN {
        failed.push(Rule::MinLen);
    }
    if count_marks(text) < MIN_MARKS {
        failed.push(Rule::MinPunct);
    }
    if !text.chars().next_back().is_some_and(is_terminal_mark) {
        failed.push(Rule::Termination);
    }
    FilterVerdict::from_rules(failed)
}

static URL: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i)\b[a-z][a-z0-9+.\-]*://\S|\bwww\.\S").unwrap());
static EMAIL: Lazy<Regex> = Lazy::new(|| Regex::new(r"[^\s@]+@[^\s@.]+\.[^\s@.]+").unwrap());
static HANDLE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?:^|\s)@\w").unwrap());
static ENUMERATION: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^(?:[0-9٠-٩۰-۹]+[.):\-]\s|[•\-*▪])").unwrap());

pub fn is_emoji(c: char) -> bool {
    matches!(c, '\u{1F300}'..='\u{1FAFF}' | '\u{2600}'..='\u{27BF}' | '\u{FE0F}')
}

/// Non-whitespace codepoint that is neither a letter, a digit, a target mark
/// nor ZWNJ.
pub fn is_symbol(c: char) -> bool {
    !(c.is_whitespace() || c.is_alphabetic() || c.is_numeric() || is_target_mark(c) || c == ZWNJ)
}

pub fn check_content(text: &str) -> FilterVerdict {
    let mut failed = Vec::new();
    if URL.is_match(text) {
        failed.push(Rule::Url);
    }
    if EMAIL.is_match(text) {
        failed.push(Rule::Email);
    }
    if HANDLE.is_match(text) {
        failed.push(Rule::Handle);
    }
    if text.chars().any(is_emoji) {
        failed.push(Rule::Emoji);
    }
    let (mut visible, mut symbols, mut letters, mut foreign) = (0usize, 0usize, 0usize, 0usize);
    for c in text.chars().filter(|c| !c.is_whitespace()) {
        visible += 1;
        if is_symbol(c) {
            symbols += 1;
        }
        if c.is_alphabetic() {
            letters += 1;
            if !in_arabic_block(c) {
                foreign += 1;
            }
        }
    }
    // symbols / visible > 0.20
    if symbols * 5 > visible {
        failed.push(Rule::SymbolRatio);
    }
    // foreign / letters > 0.30
    if foreign * 10 > letters * 3 {
        failed.push(Rule::MixedLang);
    }
    FilterVerdict::from_rules(failed)
}

pub fn check_quality(text: &str) -> FilterVerdict {
    let mut failed = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    if chars.windows(2).any(|w| w[0] == w[1] && is_target_mark(w[0])) {
        failed.push(Rule::RepeatPunct);
    }
    if ENUMERATION.is_match(text) {
        failed.push(Rule::Enum);
    }
    let (mut tokens, mut single) = (0usize, 0usize);
    for token in text.split_whitespace() {
        tokens += 1;
        if token.chars().filter(|&c| !is_target_mark(c)).count() == 1 {
            single += 1;
        }
    }
    // single / tokens > 0.50
    if single * 2 > tokens {
        failed.push(Rule::Fragment);
    }
    FilterVerdict::from_rules(failed)
}

/// Outcome of running every rule on one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assessment {
    pub verdict: FilterVerdict,
    /// Fully normalized text, the form emitted for accepted sentences.
    pub normalized: String,
}

#[derive(Debug, Clone, Default)]
pub struct SentenceFilter {
    normalizer: Normalizer,
}

impl SentenceFilter {
    pub fn new(normalizer: Normalizer) -> Self {
        SentenceFilter { normalizer }
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    /// Runs all three families; nothing short-circuits.
    pub fn assess(&self, text: &str) -> Assessment {
        let prepared = normalize_whitespace(&standardize_punctuation(text));
        let normalized = self.normalizer.normalize(&prepared);
        let verdict = check_structural(&normalized)
            .union(check_content(&prepared))
            .union(check_quality(&prepared));
        Assessment { verdict, normalized }
    }

    /// [`SentenceFilter::assess`] on a segmented sentence; a segment that
    /// ran out without a terminal mark always fails `TERMINATION`.
    pub fn assess_sentence(&self, sentence: &Sentence) -> Assessment {
        let mut assessment = self.assess(&sentence.text);
        if !sentence.terminated {
            let verdict = std::mem::take(&mut assessment.verdict);
            assessment.verdict = verdict.union(FilterVerdict::from_rules(vec![Rule::Termination]));
        }
        assessment
    }

    pub fn verdict(&self, text: &str) -> FilterVerdict {
        self.assess(text).verdict
    }
}

/// Full filter with the default normalizer.
pub fn filter_sentence(text: &str) -> FilterVerdict {
    SentenceFilter::default().verdict(text)
}
