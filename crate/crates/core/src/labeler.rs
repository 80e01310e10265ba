//! Word-level punctuation labels: extraction, stripping and reconstruction.
//!
//! A word's label is the class of the mark that immediately follows it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marks::{is_target_mark, PunctuationMark};
use crate::normalizer::normalize_whitespace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Empty,
    Comma,
    Period,
    Question,
    Colon,
}

impl Label {
    /// Fixed class order; also the tie-break order for prediction.
    pub const ALL: [Label; 5] = [Label::Empty, Label::Comma, Label::Period, Label::Question, Label::Colon];

    /// The four punctuation classes that get scored.
    pub const MARKED: [Label; 4] = [Label::Comma, Label::Period, Label::Question, Label::Colon];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn mark(self) -> Option<char> {
        match self {
            Label::Empty => None,
            Label::Comma => Some('\u{060C}'),
            Label::Period => Some('.'),
            Label::Question => Some('\u{061F}'),
            Label::Colon => Some(':'),
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Label::Empty => "EMPTY",
            Label::Comma => "COMMA",
            Label::Period => "PERIOD",
            Label::Question => "QUESTION",
            Label::Colon => "COLON",
        }
    }

    pub fn from_mark(mark: PunctuationMark, mapping: LabelMapping) -> Label {
        match (mark, mapping) {
            (PunctuationMark::Period, _) => Label::Period,
            (PunctuationMark::PersianComma, _) => Label::Comma,
            (PunctuationMark::PersianQuestion, _) => Label::Question,
            (PunctuationMark::Colon, _) => Label::Colon,
            (PunctuationMark::Exclamation, LabelMapping::Map) => Label::Period,
            (PunctuationMark::PersianSemicolon, LabelMapping::Map) => Label::Comma,
            (PunctuationMark::Exclamation | PunctuationMark::PersianSemicolon, LabelMapping::Drop) => Label::Empty,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Shape(format!("unknown label {s:?}")))
    }
}

/// How `!` and `؛`, which have no class of their own, are labeled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMapping {
    /// `!` becomes PERIOD and `؛` becomes COMMA.
    #[default]
    Map,
    /// Both become EMPTY.
    Drop,
}

impl FromStr for LabelMapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "map" => Ok(LabelMapping::Map),
            "drop" => Ok(LabelMapping::Drop),
            other => Err(Error::InvalidManifest(format!("label mapping must be map or drop, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub words: Vec<String>,
    pub labels: Vec<Label>,
    /// The punctuated sentence the sample came from.
    #[serde(default)]
    pub text: String,
}

impl LabeledSample {
    pub fn new(words: Vec<String>, labels: Vec<Label>) -> Result<Self> {
        if words.len() != labels.len() {
            return Err(Error::Shape(format!("{} words but {} labels", words.len(), labels.len())));
        }
        Ok(LabeledSample {
            words,
            labels,
            text: String::new(),
        })
    }
}

/// Wire form of a labeled sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub words: Vec<String>,
    pub labels: Vec<Label>,
    #[serde(default)]
    pub source_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl LabeledRecord {
    pub fn from_sample(sample: LabeledSample, source_id: impl Into<String>) -> Self {
        LabeledRecord {
            words: sample.words,
            labels: sample.labels,
            source_id: source_id.into(),
            text: (!sample.text.is_empty()).then_some(sample.text),
        }
    }

    pub fn into_sample(self) -> Result<LabeledSample> {
        let mut sample = LabeledSample::new(self.words, self.labels)?;
        sample.text = self.text.unwrap_or_default();
        Ok(sample)
    }
}

pub fn extract_labels(sentence: &str) -> Result<LabeledSample> {
    extract_labels_with(sentence, LabelMapping::Map)
}

/// Splits `sentence` into words and per-word labels.
///
/// Words are maximal runs of codepoints that are neither whitespace nor
/// target marks. Marks attach to the closest preceding word even across a
/// space; of several marks after one word the first non-EMPTY class wins.
/// Marks before the first word are dropped.
pub fn extract_labels_with(sentence: &str, mapping: LabelMapping) -> Result<LabeledSample> {
    let mut words: Vec<String> = Vec::new();
    let mut labels: Vec<Label> = Vec::new();
    let mut current = String::new();
    let flush = |current: &mut String, words: &mut Vec<String>, labels: &mut Vec<Label>| {
        if !current.is_empty() {
            words.push(std::mem::take(current));
            labels.push(Label::Empty);
        }
    };
    for c in sentence.chars() {
        if c.is_whitespace() {
            flush(&mut current, &mut words, &mut labels);
        } else if let Some(mark) = PunctuationMark::from_char(c) {
            flush(&mut current, &mut words, &mut labels);
            if let Some(last) = labels.last_mut() {
                if *last == Label::Empty {
                    *last = Label::from_mark(mark, mapping);
                }
            }
        } else {
            current.push(c);
        }
    }
    flush(&mut current, &mut words, &mut labels);
    if words.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(LabeledSample {
        words,
        labels,
        text: sentence.to_owned(),
    })
}

/// Removes the six target marks and re-collapses whitespace.
pub fn strip_punctuation(sentence: &str) -> String {
    let spaced: String = sentence
        .chars()
        .map(|c| if is_target_mark(c) { ' ' } else { c })
        .collect();
    normalize_whitespace(&spaced)
}

/// Joins words with single spaces, attaching each label's mark directly to
/// its word.
pub fn reconstruct(sample: &LabeledSample) -> Result<String> {
    if sample.words.len() != sample.labels.len() {
        return Err(Error::Shape(format!(
            "{} words but {} labels",
            sample.words.len(),
            sample.labels.len()
        )));
    }
    let mut out = String::new();
    for (i, (word, label)) in sample.words.iter().zip(&sample.labels).enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(word);
        if let Some(mark) = label.mark() {
            out.push(mark);
        }
    }
    Ok(out)
}
