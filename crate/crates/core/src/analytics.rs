//! Corpus-level punctuation statistics: mark distribution, per-sentence
//! coverage, pairwise co-occurrence and the marks-per-sentence histogram.
//!
//! Everything is computed from a [`MarkTally`], whose fields are plain
//! counters; tallies over disjoint parts of a corpus merge exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marks::PunctuationMark;
use crate::round::{fixed, round_half_up};

const N: usize = PunctuationMark::ALL.len();

/// Histogram buckets 0..=5 plus the open `6+` bucket.
pub const BUCKETS: usize = 7;

pub type MarkCounts = BTreeMap<PunctuationMark, u64>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkTally {
    pub sentences: u64,
    pub marks: [u64; N],
    pub coverage: [u64; N],
    /// `pairs[i][j]` for `i < j`: sentences containing both marks.
    pub pairs: [[u64; N]; N],
    pub histogram: [u64; BUCKETS],
}

impl MarkTally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut tally = Self::new();
        for t in texts {
            tally.add(t);
        }
        tally
    }

    pub fn add(&mut self, text: &str) {
        let mut per = [0u64; N];
        for c in text.chars() {
            if let Some(m) = PunctuationMark::from_char(c) {
                per[m.index()] += 1;
            }
        }
        self.sentences += 1;
        let mut total = 0u64;
        for i in 0..N {
            self.marks[i] += per[i];
            total += per[i];
            if per[i] > 0 {
                self.coverage[i] += 1;
                for (j, &count) in per.iter().enumerate().skip(i + 1) {
                    if count > 0 {
                        self.pairs[i][j] += 1;
                    }
                }
            }
        }
        self.histogram[(total as usize).min(BUCKETS - 1)] += 1;
    }

    pub fn merge(&mut self, other: &MarkTally) {
        self.sentences += other.sentences;
        for i in 0..N {
            self.marks[i] += other.marks[i];
            self.coverage[i] += other.coverage[i];
            for j in 0..N {
                self.pairs[i][j] += other.pairs[i][j];
            }
        }
        for b in 0..BUCKETS {
            self.histogram[b] += other.histogram[b];
        }
    }

    pub fn total_marks(&self) -> u64 {
        self.marks.iter().sum()
    }

    pub fn mark_counts(&self) -> MarkCounts {
        PunctuationMark::ALL.iter().map(|&m| (m, self.marks[m.index()])).collect()
    }
}

fn percent_of(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

pub fn count_marks<'a>(corpus: impl IntoIterator<Item = &'a str>) -> MarkCounts {
    MarkTally::from_texts(corpus).mark_counts()
}

/// Share of each mark in the total, in percent, at full precision.
pub fn mark_percentages(counts: &MarkCounts) -> Result<BTreeMap<PunctuationMark, f64>> {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::NoMarks);
    }
    Ok(counts.iter().map(|(&m, &c)| (m, percent_of(c, total))).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountShare {
    pub count: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairShare {
    pub marks: [PunctuationMark; 2],
    pub count: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketShare {
    pub bucket: String,
    pub count: u64,
    pub percent: f64,
}

/// All 15 unordered pairs, most frequent first.
pub fn cooccurrence<'a>(corpus: impl IntoIterator<Item = &'a str>) -> Vec<PairShare> {
    pair_shares(&MarkTally::from_texts(corpus))
}

fn pair_shares(tally: &MarkTally) -> Vec<PairShare> {
    let mut out = Vec::with_capacity(N * (N - 1) / 2);
    for i in 0..N {
        for j in i + 1..N {
            let count = tally.pairs[i][j];
            out.push(PairShare {
                marks: [PunctuationMark::ALL[i], PunctuationMark::ALL[j]],
                count,
                percent: percent_of(count, tally.sentences),
            });
        }
    }
    // stable sort keeps registry order among equal counts
    out.sort_by_key(|e| std::cmp::Reverse(e.count));
    out
}

pub fn coverage<'a>(corpus: impl IntoIterator<Item = &'a str>) -> BTreeMap<PunctuationMark, CountShare> {
    coverage_shares(&MarkTally::from_texts(corpus))
}

fn coverage_shares(tally: &MarkTally) -> BTreeMap<PunctuationMark, CountShare> {
    PunctuationMark::ALL
        .iter()
        .map(|&m| {
            let count = tally.coverage[m.index()];
            (
                m,
                CountShare {
                    count,
                    percent: percent_of(count, tally.sentences),
                },
            )
        })
        .collect()
}

pub fn bucket_label(bucket: usize) -> String {
    if bucket >= BUCKETS - 1 {
        format!("{}+", BUCKETS - 1)
    } else {
        bucket.to_string()
    }
}

pub fn count_histogram<'a>(corpus: impl IntoIterator<Item = &'a str>) -> Vec<BucketShare> {
    histogram_shares(&MarkTally::from_texts(corpus))
}

fn histogram_shares(tally: &MarkTally) -> Vec<BucketShare> {
    (0..BUCKETS)
        .map(|b| BucketShare {
            bucket: bucket_label(b),
            count: tally.histogram[b],
            percent: percent_of(tally.histogram[b], tally.sentences),
        })
        .collect()
}

/// The full statistics bundle. Percentages are rounded half-up to two
/// decimals; the average is kept at full precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_sentences: u64,
    pub total_marks: u64,
    pub avg_marks_per_sentence: f64,
    pub per_mark: BTreeMap<PunctuationMark, CountShare>,
    pub coverage: BTreeMap<PunctuationMark, CountShare>,
    pub cooccurrence: Vec<PairShare>,
    pub histogram: Vec<BucketShare>,
}

impl CorpusStats {
    pub fn from_tally(tally: &MarkTally) -> Self {
        let total_marks = tally.total_marks();
        let r2 = |p: f64| round_half_up(p, 2);
        let per_mark = PunctuationMark::ALL
            .iter()
            .map(|&m| {
                let count = tally.marks[m.index()];
                (
                    m,
                    CountShare {
                        count,
                        percent: r2(percent_of(count, total_marks)),
                    },
                )
            })
            .collect();
        let mut coverage = coverage_shares(tally);
        coverage.values_mut().for_each(|c| c.percent = r2(c.percent));
        let mut cooccurrence = pair_shares(tally);
        cooccurrence.iter_mut().for_each(|p| p.percent = r2(p.percent));
        let mut histogram = histogram_shares(tally);
        histogram.iter_mut().for_each(|b| b.percent = r2(b.percent));
        CorpusStats {
            total_sentences: tally.sentences,
            total_marks,
            avg_marks_per_sentence: if tally.sentences == 0 {
                0.0
            } else {
                total_marks as f64 / tally.sentences as f64
            },
            per_mark,
            coverage,
            cooccurrence,
            histogram,
        }
    }

    /// Plain-text rendering of the four tables.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut by_count: Vec<(&PunctuationMark, &CountShare)> = self.per_mark.iter().collect();
        by_count.sort_by_key(|e| std::cmp::Reverse(e.1.count));

        let _ = writeln!(out, "Distribution of punctuation marks");
        let _ = writeln!(out, "{:<26}{:>16}{:>12}", "Mark", "Total Count", "% of Total");
        for (m, c) in &by_count {
            let _ = writeln!(out, "{:<26}{:>16}{:>11}%", display_name(**m), thousands(c.count), fixed(c.percent, 2));
        }
        let total_pct = if self.total_marks == 0 { 0.0 } else { 100.0 };
        let _ = writeln!(out, "{:<26}{:>16}{:>11}%", "Total", thousands(self.total_marks), fixed(total_pct, 2));
        let _ = writeln!(out, "Average marks per sentence: {:.4}", self.avg_marks_per_sentence);

        let _ = writeln!(out, "\nPunctuation co-occurrences");
        let _ = writeln!(out, "{:<48}{:>16}", "Mark pair", "% of sentences");
        for p in &self.cooccurrence {
            let pair = format!("{} + {}", display_name(p.marks[0]), display_name(p.marks[1]));
            let _ = writeln!(out, "{:<48}{:>15}%", pair, fixed(p.percent, 2));
        }

        let mut cov: Vec<(&PunctuationMark, &CountShare)> = self.coverage.iter().collect();
        cov.sort_by_key(|e| std::cmp::Reverse(e.1.count));
        let _ = writeln!(out, "\nSentences containing each punctuation mark");
        let _ = writeln!(out, "{:<26}{:>16}{:>16}", "Mark", "Sentences", "% of sentences");
        for (m, c) in cov {
            let _ = writeln!(out, "{:<26}{:>16}{:>15}%", display_name(*m), thousands(c.count), fixed(c.percent, 2));
        }

        let _ = writeln!(out, "\nPunctuation marks per sentence");
        let _ = writeln!(out, "{:<12}{:>16}{:>16}", "Marks", "Sentences", "% of sentences");
        for b in &self.histogram {
            let _ = writeln!(out, "{:<12}{:>16}{:>15}%", b.bucket, thousands(b.count), fixed(b.percent, 2));
        }
        let _ = writeln!(out, "{:<12}{:>16}", "Total", thousands(self.total_sentences));
        out
    }
}

pub fn display_name(mark: PunctuationMark) -> String {
    let name = match mark {
        PunctuationMark::Period => "Period",
        PunctuationMark::PersianComma => "Persian comma",
        PunctuationMark::PersianQuestion => "Persian question",
        PunctuationMark::Colon => "Colon",
        PunctuationMark::Exclamation => "Exclamation",
        PunctuationMark::PersianSemicolon => "Persian semicolon",
    };
    format!("{name} ({})", mark.as_char())
}

/// `1234567` -> `1,234,567`.
pub fn thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}
