//! Scoring of punctuation predictions.
//!
//! Two input modes are supported. In label mode prediction and gold are
//! aligned label sequences. In text mode both are punctuated strings (for
//! example the raw output of a generative model); the words are aligned
//! first so that restorers which rewrite the text can still be scored, and
//! every non-punctuation edit is counted.
//!
//! Per-sample results are plain integer counts, so aggregation is exact and
//! independent of sample order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeler::{extract_labels_with, Label, LabelMapping};
use crate::normalizer::normalize_whitespace;
use crate::round::fixed;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// tp/fp/fn for the four punctuation classes. EMPTY is never a class here.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    classes: [ClassCounts; 4],
}

fn slot(label: Label) -> Option<usize> {
    label.index().checked_sub(1)
}

impl ConfusionCounts {
    pub fn get(&self, label: Label) -> ClassCounts {
        slot(label).map(|i| self.classes[i]).unwrap_or_default()
    }

    pub fn get_mut(&mut self, label: Label) -> Option<&mut ClassCounts> {
        slot(label).map(|i| &mut self.classes[i])
    }

    /// Records one aligned position.
    pub fn observe(&mut self, pred: Label, gold: Label) {
        if pred == gold {
            if let Some(c) = self.get_mut(gold) {
                c.tp += 1;
            }
            return;
        }
        if let Some(c) = self.get_mut(pred) {
            c.fp += 1;
        }
        if let Some(c) = self.get_mut(gold) {
            c.fn_ += 1;
        }
    }

    pub fn add_fp(&mut self, pred: Label) {
        if let Some(c) = self.get_mut(pred) {
            c.fp += 1;
        }
    }

    pub fn add_fn(&mut self, gold: Label) {
        if let Some(c) = self.get_mut(gold) {
            c.fn_ += 1;
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        for (a, b) in self.classes.iter_mut().zip(&other.classes) {
            a.tp += b.tp;
            a.fp += b.fp;
            a.fn_ += b.fn_;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Label, ClassCounts)> + '_ {
        Label::MARKED.iter().map(move |&l| (l, self.get(l)))
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn score_labels(pred: &[Label], gold: &[Label]) -> Result<ConfusionCounts> {
    if pred.len() != gold.len() {
        return Err(Error::Shape(format!(
            "{} predicted labels vs {} gold labels",
            pred.len(),
            gold.len()
        )));
    }
    let mut counts = ConfusionCounts::default();
    for (&p, &g) in pred.iter().zip(gold) {
        counts.observe(p, g);
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn from_counts(c: ClassCounts) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        Prf {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

pub fn class_metrics(counts: &ConfusionCounts, label: Label) -> Prf {
    Prf::from_counts(counts.get(label))
}

/// Unweighted means of the four per-class values. Macro F1 is the mean of
/// the per-class F1 scores, not the F1 of macro precision and recall.
pub fn macro_metrics(counts: &ConfusionCounts) -> Prf {
    let per: Vec<Prf> = Label::MARKED.iter().map(|&l| class_metrics(counts, l)).collect();
    macro_of(&per)
}

pub fn macro_of(per_class: &[Prf]) -> Prf {
    let n = per_class.len() as f64;
    Prf {
        precision: per_class.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: per_class.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: per_class.iter().map(|m| m.f1).sum::<f64>() / n,
    }
}

/// F1 of the pooled counts over the four punctuation classes.
pub fn micro_metrics(counts: &ConfusionCounts) -> Prf {
    let mut pooled = ClassCounts::default();
    for (_, c) in counts.iter() {
        pooled.tp += c.tp;
        pooled.fp += c.fp;
        pooled.fn_ += c.fn_;
    }
    Prf::from_counts(pooled)
}

/// Full sentence match: equal after whitespace normalization.
pub fn fsm(pred_text: &str, gold_text: &str) -> bool {
    normalize_whitespace(pred_text) == normalize_whitespace(gold_text)
}

/// One step of a word alignment; indices point into the source (gold) and
/// prediction word lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum AlignOp {
    Match { src: usize, pred: usize },
    Substitution { src: usize, pred: usize },
    Deletion { src: usize },
    Addition { pred: usize },
}

impl AlignOp {
    pub fn is_edit(&self) -> bool {
        !matches!(self, AlignOp::Match { .. })
    }
}

/// Minimum-cost word alignment (unit insert/delete/substitute costs).
///
/// The backtrace prefers match, then substitution, then deletion, then
/// addition, which fixes a single script among equal-cost ones.
pub fn align<S: AsRef<str>, P: AsRef<str>>(src: &[S], pred: &[P]) -> Vec<AlignOp> {
    let (n, m) = (src.len(), pred.len());
    let width = m + 1;
    let mut cost = vec![0u32; (n + 1) * width];
    for (j, c) in cost.iter_mut().enumerate().take(width) {
        *c = j as u32;
    }
    for i in 1..=n {
        cost[i * width] = i as u32;
        for j in 1..=m {
            let same = src[i - 1].as_ref() == pred[j - 1].as_ref();
            let diag = cost[(i - 1) * width + j - 1] + u32::from(!same);
            let up = cost[(i - 1) * width + j] + 1;
            let left = cost[i * width + j - 1] + 1;
            cost[i * width + j] = diag.min(up).min(left);
        }
    }
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i * width + j];
        if i > 0 && j > 0 {
            let diag = cost[(i - 1) * width + j - 1];
            if src[i - 1].as_ref() == pred[j - 1].as_ref() && here == diag {
                ops.push(AlignOp::Match { src: i - 1, pred: j - 1 });
                i -= 1;
                j -= 1;
                continue;
            }
            if here == diag + 1 {
                ops.push(AlignOp::Substitution { src: i - 1, pred: j - 1 });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == cost[(i - 1) * width + j] + 1 {
            ops.push(AlignOp::Deletion { src: i - 1 });
            i -= 1;
        } else {
            ops.push(AlignOp::Addition { pred: j - 1 });
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

/// The edit script between source and predicted words: [`align`] without
/// the matches.
pub fn align_words<P: AsRef<str>, S: AsRef<str>>(pred_words: &[P], src_words: &[S]) -> Vec<AlignOp> {
    align(src_words, pred_words).into_iter().filter(AlignOp::is_edit).collect()
}

/// Contribution of one sample to an [`EvalReport`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SampleScore {
    pub fsm: bool,
    pub counts: ConfusionCounts,
    pub additions: u64,
    pub deletions: u64,
    pub substitutions: u64,
}

impl SampleScore {
    pub fn has_edits(&self) -> bool {
        self.additions + self.deletions + self.substitutions > 0
    }
}

/// Scores a punctuated prediction against a punctuated gold sentence.
///
/// With no word edits the label sequences are compared position by
/// position. Otherwise only aligned equal words are compared; a gold mark on
/// a deleted word is a false negative and a predicted mark on an added or
/// substituted word is a false positive.
pub fn evaluate_text(pred_text: &str, gold_text: &str, mapping: LabelMapping) -> Result<SampleScore> {
    let gold = extract_labels_with(gold_text, mapping)?;
    let pred = match extract_labels_with(pred_text, mapping) {
        Ok(sample) => sample,
        Err(Error::EmptyInput) => Default::default(),
        Err(e) => return Err(e),
    };
    let mut score = SampleScore {
        fsm: fsm(pred_text, gold_text),
        ..Default::default()
    };
    let ops = align(&gold.words, &pred.words);
    if !ops.iter().any(AlignOp::is_edit) {
        score.counts = score_labels(&pred.labels, &gold.labels)?;
        return Ok(score);
    }
    for op in ops {
        match op {
            AlignOp::Match { src, pred: p } => score.counts.observe(pred.labels[p], gold.labels[src]),
            AlignOp::Substitution { pred: p, .. } => {
                score.substitutions += 1;
                score.counts.add_fp(pred.labels[p]);
            }
            AlignOp::Deletion { src } => {
                score.deletions += 1;
                score.counts.add_fn(gold.labels[src]);
            }
            AlignOp::Addition { pred: p } => {
                score.additions += 1;
                score.counts.add_fp(pred.labels[p]);
            }
        }
    }
    Ok(score)
}

/// Scores aligned label sequences; FSM means the sequences are identical.
pub fn evaluate_labels(pred: &[Label], gold: &[Label]) -> Result<SampleScore> {
    Ok(SampleScore {
        fsm: pred == gold,
        counts: score_labels(pred, gold)?,
        ..Default::default()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Label,
    Text,
}

impl std::str::FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "label" => Ok(EvalMode::Label),
            "text" => Ok(EvalMode::Text),
            other => Err(Error::Shape(format!("mode must be label or text, got {other:?}"))),
        }
    }
}

/// One evaluation input record, as read from JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EvalPair {
    Text { gold: String, pred: String },
    Labels { gold_labels: Vec<Label>, pred_labels: Vec<Label> },
}

impl EvalPair {
    pub fn mode(&self) -> EvalMode {
        match self {
            EvalPair::Text { .. } => EvalMode::Text,
            EvalPair::Labels { .. } => EvalMode::Label,
        }
    }

    pub fn score(&self, mapping: LabelMapping) -> Result<SampleScore> {
        match self {
            EvalPair::Text { gold, pred } => evaluate_text(pred, gold, mapping),
            EvalPair::Labels {
                gold_labels,
                pred_labels,
            } => evaluate_labels(pred_labels, gold_labels),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EditStats {
    pub additions: u64,
    pub deletions: u64,
    pub substitutions: u64,
    pub samples_with_edits: u64,
    /// Fraction of samples with at least one word edit.
    pub edit_rate: f64,
}

/// Running totals; merging two accumulators is exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalAccumulator {
    pub samples: u64,
    pub fsm_matches: u64,
    pub counts: ConfusionCounts,
    pub additions: u64,
    pub deletions: u64,
    pub substitutions: u64,
    pub samples_with_edits: u64,
}

impl EvalAccumulator {
    pub fn add(&mut self, score: &SampleScore) {
        self.samples += 1;
        self.fsm_matches += u64::from(score.fsm);
        self.counts.merge(&score.counts);
        self.additions += score.additions;
        self.deletions += score.deletions;
        self.substitutions += score.substitutions;
        self.samples_with_edits += u64::from(score.has_edits());
    }

    pub fn merge(&mut self, other: &EvalAccumulator) {
        self.samples += other.samples;
        self.fsm_matches += other.fsm_matches;
        self.counts.merge(&other.counts);
        self.additions += other.additions;
        self.deletions += other.deletions;
        self.substitutions += other.substitutions;
        self.samples_with_edits += other.samples_with_edits;
    }

    pub fn finish(&self) -> Result<EvalReport> {
        if self.samples == 0 {
            return Err(Error::NoSamples);
        }
        let per_class: BTreeMap<Label, ClassReport> = self
            .counts
            .iter()
            .map(|(label, c)| {
                let m = Prf::from_counts(c);
                (
                    label,
                    ClassReport {
                        precision: m.precision,
                        recall: m.recall,
                        f1: m.f1,
                        tp: c.tp,
                        fp: c.fp,
                        fn_: c.fn_,
                    },
                )
            })
            .collect();
        Ok(EvalReport {
            samples: self.samples,
            per_class,
            macro_avg: macro_metrics(&self.counts),
            micro_avg: micro_metrics(&self.counts),
            fsm_matches: self.fsm_matches,
            fsm_rate: ratio(self.fsm_matches, self.samples),
            edit_stats: EditStats {
                additions: self.additions,
                deletions: self.deletions,
                substitutions: self.substitutions,
                samples_with_edits: self.samples_with_edits,
                edit_rate: ratio(self.samples_with_edits, self.samples),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: u64,
    pub per_class: BTreeMap<Label, ClassReport>,
    #[serde(rename = "macro")]
    pub macro_avg: Prf,
    #[serde(rename = "micro")]
    pub micro_avg: Prf,
    pub fsm_matches: u64,
    pub fsm_rate: f64,
    pub edit_stats: EditStats,
}

impl EvalReport {
    /// Per-class table followed by the macro and micro rows, four decimals.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<22}{:>10}{:>10}{:>10}", "Punctuation", "Precision", "Recall", "F1-Score");
        let row = |out: &mut String, name: &str, m: Prf| {
            let _ = writeln!(
                out,
                "{:<22}{:>10}{:>10}{:>10}",
                name,
                fixed(m.precision, 4),
                fixed(m.recall, 4),
                fixed(m.f1, 4)
            );
        };
        for (label, c) in &self.per_class {
            let name = match label {
                Label::Comma => "Persian Comma (،)",
                Label::Period => "Period (.)",
                Label::Question => "Question (؟)",
                Label::Colon => "Colon (:)",
                Label::Empty => continue,
            };
            row(
                &mut out,
                name,
                Prf {
                    precision: c.precision,
                    recall: c.recall,
                    f1: c.f1,
                },
            );
        }
        row(&mut out, "Macro Average", self.macro_avg);
        row(&mut out, "Micro Average", self.micro_avg);
        let _ = writeln!(
            out,
            "\nSamples: {}  FSM: {}/{} ({}%)",
            self.samples,
            self.fsm_matches,
            self.samples,
            fixed(self.fsm_rate * 100.0, 2)
        );
        let e = &self.edit_stats;
        let _ = writeln!(
            out,
            "Word edits: {} additions, {} deletions, {} substitutions; {} samples edited ({}%)",
            e.additions,
            e.deletions,
            e.substitutions,
            e.samples_with_edits,
            fixed(e.edit_rate * 100.0, 2)
        );
        out
    }
}

/// Scores every pair and aggregates. Errors with `NO_SAMPLES` on an empty
/// stream.
pub fn evaluate_corpus<I>(pairs: I, mode: EvalMode, mapping: LabelMapping) -> Result<EvalReport>
where
    I: IntoIterator<Item = EvalPair>,
{
    let mut acc = EvalAccumulator::default();
    for pair in pairs {
        if pair.mode() != mode {
            return Err(Error::Shape(format!("{:?} record in {mode:?} mode", pair.mode())));
        }
        acc.add(&pair.score(mapping)?);
    }
    acc.finish()
}
