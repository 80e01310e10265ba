//! The six target punctuation marks tracked by the pipeline.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PunctuationMark {
    Period,
    PersianComma,
    PersianQuestion,
    Colon,
    Exclamation,
    PersianSemicolon,
}

impl PunctuationMark {
    pub const ALL: [PunctuationMark; 6] = [
        PunctuationMark::Period,
        PunctuationMark::PersianComma,
        PunctuationMark::PersianQuestion,
        PunctuationMark::Colon,
        PunctuationMark::Exclamation,
        PunctuationMark::PersianSemicolon,
    ];

    pub const fn as_char(self) -> char {
        match self {
            PunctuationMark::Period => '\u{002E}',
            PunctuationMark::PersianComma => '\u{060C}',
            PunctuationMark::PersianQuestion => '\u{061F}',
            PunctuationMark::Colon => '\u{003A}',
            PunctuationMark::Exclamation => '\u{0021}',
            PunctuationMark::PersianSemicolon => '\u{061B}',
        }
    }

    pub const fn from_char(c: char) -> Option<PunctuationMark> {
        match c {
            '\u{002E}' => Some(PunctuationMark::Period),
            '\u{060C}' => Some(PunctuationMark::PersianComma),
            '\u{061F}' => Some(PunctuationMark::PersianQuestion),
            '\u{003A}' => Some(PunctuationMark::Colon),
            '\u{0021}' => Some(PunctuationMark::Exclamation),
            '\u{061B}' => Some(PunctuationMark::PersianSemicolon),
            _ => None,
        }
    }

    /// Position in [`PunctuationMark::ALL`], usable as an array index.
    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn name(self) -> &'static str {
        match self {
            PunctuationMark::Period => "PERIOD",
            PunctuationMark::PersianComma => "PERSIAN_COMMA",
            PunctuationMark::PersianQuestion => "PERSIAN_QUESTION",
            PunctuationMark::Colon => "COLON",
            PunctuationMark::Exclamation => "EXCLAMATION",
            PunctuationMark::PersianSemicolon => "PERSIAN_SEMICOLON",
        }
    }

    /// Marks that may close a sentence.
    pub const fn is_terminal(self) -> bool {
        matches!(
            self,
            PunctuationMark::Period | PunctuationMark::Exclamation | PunctuationMark::PersianQuestion
        )
    }
}

impl fmt::Display for PunctuationMark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn is_target_mark(c: char) -> bool {
    PunctuationMark::from_char(c).is_some()
}

pub fn is_terminal_mark(c: char) -> bool {
    matches!(c, '.' | '!' | '\u{061F}')
}

/// Number of target marks in `text`.
pub fn count_marks(text: &str) -> usize {
    text.chars().filter(|&c| is_target_mark(c)).count()
}
