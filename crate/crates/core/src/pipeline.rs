//! Manifest-driven curation: read sources, segment, filter, deduplicate,
//! optionally subsample, split and label, with a run report that accounts
//! for every sentence at every stage.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{CorpusStats, MarkTally};
use crate::dedup::deduplicate;
use crate::error::{Error, Result};
use crate::evaluator::{evaluate_corpus, EvalMode, EvalPair, EvalReport};
use crate::jsonl::{self, JsonlReader, JsonlWriter, TextRecord};
use crate::labeler::{extract_labels_with, LabelMapping, LabeledRecord};
use crate::normalizer::{normalize_whitespace, standardize_punctuation, CodepointRange, Normalizer};
use crate::segmenter::{segment, Rule, Sentence, SentenceFilter};
use crate::split::{split, stratified_sample, write_split, DatasetSplit, PartSizes, SplitSpec};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    /// One document per line.
    #[default]
    Plain,
    /// One JSON object per line; the document is the string at `text_field`.
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceEntry {
    pub id: String,
    /// Relative paths are taken from the manifest's directory.
    pub path: PathBuf,
    #[serde(default)]
    pub format: SourceFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_field: Option<String>,
}

impl SourceEntry {
    pub fn text_field(&self) -> &str {
        self.text_field.as_deref().unwrap_or("text")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    #[serde(default = "stratify_default")]
    pub stratify_by_source: bool,
}

fn stratify_default() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceManifest {
    pub seed: u64,
    /// Replaces the default extra retained ranges (Latin letters).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retain: Option<Vec<CodepointRange>>,
    #[serde(default)]
    pub label_mapping: LabelMapping,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    pub split: SplitSection,
    pub sources: Vec<SourceEntry>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl SourceManifest {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let manifest: SourceManifest = toml::from_str(text).map_err(|e| Error::InvalidManifest(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let manifest: SourceManifest =
            serde_json::from_str(text).map_err(|e| Error::InvalidManifest(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    /// Loads a `.json` manifest as JSON and anything else as TOML.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidManifest(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut manifest = if is_json {
            Self::from_json_str(&text)?
        } else {
            Self::from_toml_str(&text)?
        };
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(manifest)
    }

    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = dir.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for s in &self.sources {
            if s.id.trim().is_empty() {
                return Err(Error::InvalidManifest("source with empty id".into()));
            }
            if !ids.insert(s.id.as_str()) {
                return Err(Error::InvalidManifest(format!("duplicate source id {:?}", s.id)));
            }
            if s.format == SourceFormat::Plain && s.text_field.is_some() {
                return Err(Error::InvalidManifest(format!(
                    "source {:?}: text_field only applies to jsonl sources",
                    s.id
                )));
            }
        }
        if self.sources.is_empty() {
            return Err(Error::InvalidManifest("no sources listed".into()));
        }
        let sizes = [self.split.train, self.split.validation, self.split.test];
        if sizes.contains(&0) {
            return Err(Error::InvalidManifest(format!("split sizes must be positive, got {sizes:?}")));
        }
        if self.sample_size == Some(0) {
            return Err(Error::InvalidManifest("sample_size must be positive".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, source: &SourceEntry) -> PathBuf {
        if source.path.is_absolute() {
            source.path.clone()
        } else {
            self.base_dir.join(&source.path)
        }
    }

    pub fn normalizer(&self) -> Normalizer {
        match &self.retain {
            Some(ranges) => Normalizer::with_retain(ranges.clone()),
            None => Normalizer::default(),
        }
    }

    pub fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            seed,
            train_size: self.split.train,
            val_size: self.split.validation,
            test_size: self.split.test,
            stratify_by_source: self.split.stratify_by_source,
        }
    }
}

/// Streams the non-blank documents of one source as `(line index, text)`.
pub struct DocumentReader {
    id: String,
    path: PathBuf,
    format: SourceFormat,
    field: String,
    reader: BufReader<File>,
    line: u64,
    buf: String,
}

impl DocumentReader {
    pub fn open(source: &SourceEntry, path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| unreadable(source, path, e))?;
        Ok(DocumentReader {
            id: source.id.clone(),
            path: path.to_path_buf(),
            format: source.format,
            field: source.text_field().to_string(),
            reader: BufReader::new(file),
            line: 0,
            buf: String::new(),
        })
    }

    fn fail(&self, e: io::Error) -> Error {
        Error::SourceUnreadable {
            id: self.id.clone(),
            path: self.path.clone(),
            source: e,
        }
    }

    fn document(&self, line: &str) -> Result<Option<String>> {
        if line.trim().is_empty() {
            return Ok(None);
        }
        match self.format {
            SourceFormat::Plain => Ok(Some(line.to_string())),
            SourceFormat::Jsonl => {
                let value: serde_json::Value = serde_json::from_str(line).map_err(|e| {
                    self.fail(io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", self.line)))
                })?;
                match value.get(&self.field) {
                    Some(serde_json::Value::String(text)) => Ok(Some(text.clone())),
                    _ => Err(self.fail(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("line {}: no string field {:?}", self.line, self.field),
                    ))),
                }
            }
        }
    }
}

fn unreadable(source: &SourceEntry, path: &Path, e: io::Error) -> Error {
    Error::SourceUnreadable {
        id: source.id.clone(),
        path: path.to_path_buf(),
        source: e,
    }
}

impl Iterator for DocumentReader {
    type Item = Result<(u64, String)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(self.fail(e))),
            }
            let index = self.line;
            self.line += 1;
            let mut line = self.buf.trim_end_matches(['\n', '\r']);
            if index == 0 {
                line = line.strip_prefix('\u{feff}').unwrap_or(line);
            }
            match self.document(line) {
                Ok(Some(text)) => return Some(Ok((index, text))),
                Ok(None) => continue,
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

/// One line of `filter_audit.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub source_id: String,
    pub doc_index: u64,
    pub sent_index: u32,
    pub text: String,
    pub accepted: bool,
    pub failed_rules: Vec<Rule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub input: usize,
    pub output: usize,
    pub seconds: f64,
    /// Input items processed per second of stage time.
    pub per_second: f64,
}

impl StageReport {
    fn new(stage: &str, input: usize, output: usize, elapsed: Duration) -> Self {
        let seconds = elapsed.as_secs_f64();
        StageReport {
            stage: stage.into(),
            input,
            output,
            seconds,
            per_second: if seconds > 0.0 { input as f64 / seconds } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConservationCheck {
    pub from: String,
    pub to: String,
    pub output: usize,
    pub input: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceReport {
    pub id: String,
    pub documents: usize,
    pub sentences: usize,
    pub accepted: usize,
}

/// Written to `run_report.json`. Only `started_unix_ms`, the stage
/// timings and the rates vary between runs of the same manifest and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub toolkit_version: String,
    pub seed: u64,
    pub started_unix_ms: u128,
    pub sources: Vec<SourceReport>,
    pub stages: Vec<StageReport>,
    pub rejected: usize,
    pub rule_rejections: BTreeMap<Rule, usize>,
    pub split: Option<PartSizes>,
    pub conservation: Vec<ConservationCheck>,
    pub conserved: bool,
    pub wall_seconds: f64,
    pub sentences_per_second: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunReport {
    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == name)
    }

    fn check_conservation(&mut self) {
        self.conservation = self
            .stages
            .windows(2)
            .filter(|w| w[0].stage != "read")
            .map(|w| ConservationCheck {
                from: w[0].stage.clone(),
                to: w[1].stage.clone(),
                output: w[0].output,
                input: w[1].input,
                holds: w[0].output == w[1].input,
            })
            .collect();
        self.conserved = self.conservation.iter().all(|c| c.holds);
    }

    /// One line per stage plus the conservation verdict.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for s in &self.stages {
            out.push_str(&format!(
                "{:<8} in {:>10}  out {:>10}  {:>8.2}s  {:>12.0}/s\n",
                s.stage, s.input, s.output, s.seconds, s.per_second
            ));
        }
        for c in &self.conservation {
            out.push_str(&format!(
                "{} -> {}: {} == {} {}\n",
                c.from,
                c.to,
                c.output,
                c.input,
                if c.holds { "ok" } else { "VIOLATED" }
            ));
        }
        out.push_str(&format!(
            "wall {:.2}s, {:.0} sentences/s\n",
            self.wall_seconds, self.sentences_per_second
        ));
        out
    }
}

#[derive(Debug, Clone)]
pub struct CurateOptions {
    /// Overrides the manifest seed.
    pub seed: Option<u64>,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub jobs: Option<usize>,
    /// Documents handed to the workers at a time.
    pub chunk_docs: usize,
}

impl Default for CurateOptions {
    fn default() -> Self {
        CurateOptions {
            seed: None,
            jobs: None,
            chunk_docs: 4096,
        }
    }
}

pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Io(io::Error::other(e)))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs the whole pipeline into `out_dir`. The run report is written even
/// when sampling or splitting fails, so an empty corpus still leaves a
/// zero-count report behind.
pub fn curate(manifest: &SourceManifest, out_dir: &Path, options: &CurateOptions) -> Result<RunReport> {
    manifest.validate()?;
    with_jobs(options.jobs, || run_curate(manifest, out_dir, options))?
}

fn run_curate(manifest: &SourceManifest, out_dir: &Path, options: &CurateOptions) -> Result<RunReport> {
    let started = Instant::now();
    let seed = options.seed.unwrap_or(manifest.seed);
    std::fs::create_dir_all(out_dir)?;
    let filter = SentenceFilter::new(manifest.normalizer());
    let mut audit = JsonlWriter::create(out_dir.join("filter_audit.jsonl"))?;

    let mut report = RunReport {
        toolkit_version: crate::VERSION.to_string(),
        seed,
        started_unix_ms: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
        sources: Vec::new(),
        stages: Vec::new(),
        rejected: 0,
        rule_rejections: Rule::ALL.iter().map(|&r| (r, 0)).collect(),
        split: None,
        conservation: Vec::new(),
        conserved: true,
        wall_seconds: 0.0,
        sentences_per_second: 0.0,
        error: None,
    };

    let mut read_time = Duration::ZERO;
    let mut segment_time = Duration::ZERO;
    let mut filter_time = Duration::ZERO;
    let mut documents = 0usize;
    let mut segmented = 0usize;
    let mut assessed = 0usize;
    let mut accepted: Vec<Sentence> = Vec::new();

    for source in &manifest.sources {
        let path = manifest.resolve(source);
        let mut reader = DocumentReader::open(source, &path)?;
        let mut counts = SourceReport {
            id: source.id.clone(),
            documents: 0,
            sentences: 0,
            accepted: 0,
        };
        loop {
            let t = Instant::now();
            let chunk: Vec<(u64, String)> =
                reader.by_ref().take(options.chunk_docs.max(1)).collect::<Result<_>>()?;
            read_time += t.elapsed();
            if chunk.is_empty() {
                break;
            }
            counts.documents += chunk.len();

            let t = Instant::now();
            let sentences: Vec<Sentence> = chunk
                .par_iter()
                .flat_map_iter(|(doc, text)| {
                    let prepared = normalize_whitespace(&standardize_punctuation(text));
                    segment(&source.id, *doc, &prepared)
                })
                .collect();
            segment_time += t.elapsed();
            counts.sentences += sentences.len();

            let t = Instant::now();
            let assessments: Vec<_> = sentences.par_iter().map(|s| filter.assess_sentence(s)).collect();
            assessed += assessments.len();
            for (sentence, assessment) in sentences.into_iter().zip(assessments) {
                let verdict = assessment.verdict;
                for rule in &verdict.failed_rules {
                    *report.rule_rejections.entry(*rule).or_default() += 1;
                }
                audit.write(&AuditRecord {
                    source_id: sentence.source_id.clone(),
                    doc_index: sentence.doc_index,
                    sent_index: sentence.sent_index,
                    text: sentence.text.clone(),
                    accepted: verdict.accepted,
                    failed_rules: verdict.failed_rules,
                })?;
                if verdict.accepted {
                    counts.accepted += 1;
                    accepted.push(Sentence {
                        text: assessment.normalized,
                        ..sentence
                    });
                } else {
                    report.rejected += 1;
                }
            }
            filter_time += t.elapsed();
        }
        info!(
            "{}: {} documents, {} sentences, {} accepted",
            source.id, counts.documents, counts.sentences, counts.accepted
        );
        documents += counts.documents;
        segmented += counts.sentences;
        report.sources.push(counts);
    }
    audit.finish()?;

    report.stages.push(StageReport::new("read", documents, documents, read_time));
    report.stages.push(StageReport::new("segment", documents, segmented, segment_time));
    report.stages.push(StageReport::new("filter", assessed, accepted.len(), filter_time));

    let t = Instant::now();
    let dedup_in = accepted.len();
    let unique = deduplicate(accepted);
    report.stages.push(StageReport::new("dedup", dedup_in, unique.len(), t.elapsed()));
    info!("dedup kept {} of {dedup_in}", unique.len());

    let outcome = finish_stages(manifest, seed, out_dir, unique, &mut report);
    if let Err(e) = &outcome {
        report.error = Some(e.code().to_string());
    }
    report.check_conservation();
    report.wall_seconds = started.elapsed().as_secs_f64();
    report.sentences_per_second = if report.wall_seconds > 0.0 {
        segmented as f64 / report.wall_seconds
    } else {
        0.0
    };
    jsonl::write_json(out_dir.join("run_report.json"), &report)?;
    outcome.map(|()| report)
}

fn finish_stages(
    manifest: &SourceManifest,
    seed: u64,
    out_dir: &Path,
    unique: Vec<Sentence>,
    report: &mut RunReport,
) -> Result<()> {
    let t = Instant::now();
    let sample_in = unique.len();
    let subset = match manifest.sample_size {
        Some(n) => stratified_sample(&unique, n, seed)?,
        None => unique,
    };
    report.stages.push(StageReport::new("sample", sample_in, subset.len(), t.elapsed()));

    let t = Instant::now();
    let spec = manifest.split_spec(seed);
    let parts = match split(&subset, &spec) {
        Ok(parts) => parts,
        Err(e) => {
            report.stages.push(StageReport::new("split", subset.len(), 0, t.elapsed()));
            return Err(e);
        }
    };
    let manifest_out = write_split(out_dir, &parts, &spec)?;
    let assigned = manifest_out.sizes.train + manifest_out.sizes.validation + manifest_out.sizes.test;
    report.stages.push(StageReport::new("split", subset.len(), assigned, t.elapsed()));
    report.split = Some(manifest_out.sizes);

    let t = Instant::now();
    let labeled = write_labels(out_dir, &parts, manifest.label_mapping)?;
    report.stages.push(StageReport::new("label", assigned, labeled, t.elapsed()));
    Ok(())
}

/// Writes `<part>.labels.jsonl` next to each split part.
pub fn write_labels(dir: &Path, parts: &DatasetSplit, mapping: LabelMapping) -> Result<usize> {
    let mut written = 0;
    for (name, sentences) in parts.parts() {
        let records: Vec<LabeledRecord> = sentences
            .par_iter()
            .map(|s| extract_labels_with(&s.text, mapping).map(|l| LabeledRecord::from_sample(l, s.source_id.clone())))
            .collect::<Result<_>>()?;
        jsonl::write_all(dir.join(format!("{name}.labels.jsonl")), &records)?;
        written += records.len();
    }
    Ok(written)
}

/// Statistics over a JSONL sentence corpus.
pub fn stats_file(path: impl AsRef<Path>) -> Result<CorpusStats> {
    let mut tally = MarkTally::new();
    for record in JsonlReader::<TextRecord>::open(path)? {
        tally.add(&record?.text);
    }
    if tally.sentences == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(CorpusStats::from_tally(&tally))
}

/// Lines of a plain-text file, or the `text` fields of a `.jsonl` file.
/// Blank lines are kept in plain files so line alignment survives.
pub fn read_texts(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("jsonl")) {
        return Ok(jsonl::read_all::<TextRecord>(path)?.into_iter().map(|r| r.text).collect());
    }
    let text = std::fs::read_to_string(path)?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    Ok(text.lines().map(str::to_string).collect())
}

/// Scores a prediction file against a gold file. Text mode reads aligned
/// lines; label mode reads labeled-sample JSONL. Differing lengths are a
/// shape error.
pub fn evaluate_files(
    gold_path: impl AsRef<Path>,
    pred_path: impl AsRef<Path>,
    mode: EvalMode,
    mapping: LabelMapping,
) -> Result<EvalReport> {
    let pairs: Vec<EvalPair> = match mode {
        EvalMode::Text => {
            let gold = read_texts(gold_path)?;
            let pred = read_texts(pred_path)?;
            check_lengths(gold.len(), pred.len())?;
            gold.into_iter().zip(pred).map(|(gold, pred)| EvalPair::Text { gold, pred }).collect()
        }
        EvalMode::Label => {
            let gold = jsonl::read_all::<LabeledRecord>(gold_path)?;
            let pred = jsonl::read_all::<LabeledRecord>(pred_path)?;
            check_lengths(gold.len(), pred.len())?;
            gold.into_iter()
                .zip(pred)
                .map(|(g, p)| EvalPair::Labels {
                    gold_labels: g.labels,
                    pred_labels: p.labels,
                })
                .collect()
        }
    };
    evaluate_corpus(pairs, mode, mapping)
}

fn check_lengths(gold: usize, pred: usize) -> Result<()> {
    if gold != pred {
        return Err(Error::Shape(format!("gold has {gold} lines but predictions have {pred}")));
    }
    Ok(())
}
