use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;

use punctkit::baseline::{self, CommandRestorer, PerceptronModel, Restorer};
use punctkit::dedup::deduplicate;
use punctkit::evaluator::EvalMode;
use punctkit::jsonl::{self, JsonlReader};
use punctkit::labeler::{extract_labels_with, strip_punctuation, LabelMapping, LabeledRecord};
use punctkit::normalizer::{normalize_whitespace, standardize_punctuation, CodepointRange, Normalizer};
use punctkit::pipeline::{self, AuditRecord, CurateOptions, SourceManifest};
use punctkit::segmenter::{segment, Rule, Sentence, SentenceFilter};
use punctkit::split::{split, write_split, SplitSpec};
use punctkit::Error;

#[derive(Parser)]
#[command(name = "punctkit", version, about = "Persian punctuation corpus toolkit")]
struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "PUNCTKIT_JOBS")]
    jobs: Option<usize>,

    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline described by a manifest.
    Curate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the manifest seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Normalize each line of a plain-text file.
    Normalize {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        retain: RetainArgs,
    },
    /// Split documents (one per line) into sentence records.
    Segment {
        input: PathBuf,
        #[arg(long, default_value = "input")]
        source_id: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply the sentence filters; writes accepted.jsonl and filter_audit.jsonl.
    Filter {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        retain: RetainArgs,
    },
    /// Drop exact duplicates after case and whitespace folding.
    Dedup {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a sentence corpus into train, validation and test parts.
    Split {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Take seed and sizes from a manifest; flags still win.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        train: Option<usize>,
        #[arg(long)]
        validation: Option<usize>,
        #[arg(long)]
        test: Option<usize>,
        /// Shuffle globally instead of per source.
        #[arg(long)]
        no_stratify: bool,
    },
    /// Punctuation statistics for a sentence corpus.
    Stats {
        input: PathBuf,
        /// Directory for stats.json and stats.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn sentences into word and label sequences.
    MakeLabels {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "map")]
        label_mapping: LabelMapping,
    },
    /// Score predictions against gold data.
    Evaluate {
        gold: PathBuf,
        pred: PathBuf,
        #[arg(long, default_value = "text")]
        mode: EvalMode,
        #[arg(long, default_value = "map")]
        label_mapping: LabelMapping,
        /// Directory for eval_report.json and eval_report.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the averaged-perceptron baseline on labeled JSONL.
    TrainBaseline {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Punctuate plain-text lines with a trained model or an external command.
    Restore {
        /// Defaults to stdin.
        input: Option<PathBuf>,
        #[arg(long, required_unless_present = "command", conflicts_with = "command")]
        model: Option<PathBuf>,
        /// External restorer: reads lines on stdin, writes one line each.
        #[arg(long)]
        command: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Remove existing marks from the input first.
        #[arg(long)]
        strip: bool,
    },
}

#[derive(Args)]
struct RetainArgs {
    /// Extra retained codepoint range such as 0041-005A; replaces the
    /// default Latin letters. Repeatable.
    #[arg(long = "retain")]
    ranges: Vec<CodepointRange>,
}

impl RetainArgs {
    fn normalizer(&self) -> Normalizer {
        if self.ranges.is_empty() {
            Normalizer::default()
        } else {
            Normalizer::with_retain(self.ranges.clone())
        }
    }
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: serde::Serialize>(out: &mut dyn Write, record: &T) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn read_sentences(path: &Path) -> anyhow::Result<Vec<Sentence>> {
    Ok(jsonl::read_all::<Sentence>(path)?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Curate { manifest, out, seed } => {
            let manifest = SourceManifest::load(&manifest)?;
            let options = CurateOptions {
                seed,
                ..CurateOptions::default()
            };
            let report = pipeline::curate(&manifest, &out, &options)?;
            print!("{}", report.summary());
            if !report.conserved {
                bail!("stage conservation violated; see run_report.json");
            }
        }
        Command::Normalize { input, out, retain } => {
            let normalizer = retain.normalizer();
            let mut out = output(out.as_deref())?;
            let reader = BufReader::new(File::open(&input).with_context(|| input.display().to_string())?);
            for line in reader.lines() {
                writeln!(out, "{}", normalizer.normalize(&standardize_punctuation(&line?)))?;
            }
            out.flush()?;
        }
        Command::Segment { input, source_id, out } => {
            let mut out = output(out.as_deref())?;
            let reader = BufReader::new(File::open(&input).with_context(|| input.display().to_string())?);
            for (doc, line) in reader.lines().enumerate() {
                let text = normalize_whitespace(&standardize_punctuation(&line?));
                for sentence in segment(&source_id, doc as u64, &text) {
                    emit(&mut out, &sentence)?;
                }
            }
            out.flush()?;
        }
        Command::Filter { input, out, retain } => {
            let filter = SentenceFilter::new(retain.normalizer());
            std::fs::create_dir_all(&out)?;
            let mut accepted = jsonl::JsonlWriter::create(out.join("accepted.jsonl"))?;
            let mut audit = jsonl::JsonlWriter::create(out.join("filter_audit.jsonl"))?;
            let mut tally: std::collections::BTreeMap<Rule, usize> = Rule::ALL.iter().map(|&r| (r, 0)).collect();
            let (mut kept, mut total) = (0usize, 0usize);
            for sentence in JsonlReader::<Sentence>::open(&input)? {
                let sentence = sentence?;
                let assessment = filter.assess_sentence(&sentence);
                total += 1;
                for rule in &assessment.verdict.failed_rules {
                    *tally.entry(*rule).or_default() += 1;
                }
                audit.write(&AuditRecord {
                    source_id: sentence.source_id.clone(),
                    doc_index: sentence.doc_index,
                    sent_index: sentence.sent_index,
                    text: sentence.text.clone(),
                    accepted: assessment.verdict.accepted,
                    failed_rules: assessment.verdict.failed_rules.clone(),
                })?;
                if assessment.verdict.accepted {
                    kept += 1;
                    accepted.write(&Sentence {
                        text: assessment.normalized,
                        ..sentence
                    })?;
                }
            }
            accepted.finish()?;
            audit.finish()?;
            println!("accepted {kept} of {total}");
            for (rule, n) in tally.iter().filter(|(_, n)| **n > 0) {
                println!("  {rule}: {n}");
            }
        }
        Command::Dedup { input, out } => {
            let sentences = read_sentences(&input)?;
            let before = sentences.len();
            let unique = deduplicate(sentences);
            info!("kept {} of {before}", unique.len());
            let mut out = output(out.as_deref())?;
            for s in &unique {
                emit(&mut out, s)?;
            }
            out.flush()?;
        }
        Command::Split {
            input,
            out,
            manifest,
            seed,
            train,
            validation,
            test,
            no_stratify,
        } => {
            let from_manifest = manifest.map(SourceManifest::load).transpose()?;
            let base = from_manifest.as_ref().map(|m| m.split_spec(m.seed));
            let pick = |flag: Option<usize>, from: Option<usize>, name: &str| {
                flag.or(from).with_context(|| format!("--{name} or --manifest is required"))
            };
            let spec = SplitSpec {
                seed: seed.or(base.map(|b| b.seed)).unwrap_or(0),
                train_size: pick(train, base.map(|b| b.train_size), "train")?,
                val_size: pick(validation, base.map(|b| b.val_size), "validation")?,
                test_size: pick(test, base.map(|b| b.test_size), "test")?,
                stratify_by_source: !no_stratify && base.is_none_or(|b| b.stratify_by_source),
            };
            let sentences = read_sentences(&input)?;
            let parts = split(&sentences, &spec)?;
            let described = write_split(&out, &parts, &spec)?;
            println!(
                "train {} / validation {} / test {}",
                described.sizes.train, described.sizes.validation, described.sizes.test
            );
        }
        Command::Stats { input, out } => {
            let stats = pipeline::stats_file(&input)?;
            let rendered = stats.render();
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                jsonl::write_json(dir.join("stats.json"), &stats)?;
                std::fs::write(dir.join("stats.txt"), &rendered)?;
            }
            print!("{rendered}");
        }
        Command::MakeLabels {
            input,
            out,
            label_mapping,
        } => {
            let mut out = output(out.as_deref())?;
            for sentence in JsonlReader::<Sentence>::open(&input)? {
                let sentence = sentence?;
                let sample = extract_labels_with(&sentence.text, label_mapping)
                    .with_context(|| format!("labeling {:?}", sentence.text))?;
                emit(&mut out, &LabeledRecord::from_sample(sample, sentence.source_id))?;
            }
            out.flush()?;
        }
        Command::Evaluate {
            gold,
            pred,
            mode,
            label_mapping,
            out,
        } => {
            let report = pipeline::evaluate_files(&gold, &pred, mode, label_mapping)?;
            let rendered = report.render();
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                jsonl::write_json(dir.join("eval_report.json"), &report)?;
                std::fs::write(dir.join("eval_report.txt"), &rendered)?;
            }
            print!("{rendered}");
        }
        Command::TrainBaseline {
            input,
            out,
            epochs,
            seed,
        } => {
            let samples = jsonl::read_all::<LabeledRecord>(&input)?
                .into_iter()
                .map(LabeledRecord::into_sample)
                .collect::<punctkit::Result<Vec<_>>>()?;
            let model = baseline::train(&samples, epochs, seed)?;
            model.save(&out)?;
            println!(
                "trained on {} samples, {} epochs, {} features",
                samples.len(),
                epochs,
                model.weights.len()
            );
        }
        Command::Restore {
            input,
            model,
            command,
            out,
            strip,
        } => {
            let restorer: Box<dyn Restorer> = match (model, command) {
                (Some(path), _) => Box::new(PerceptronModel::load(&path)?),
                (None, Some(cmd)) => Box::new(CommandRestorer::parse(&cmd)?),
                (None, None) => bail!("--model or --command is required"),
            };
            let lines: Vec<String> = match &input {
                Some(p) => BufReader::new(File::open(p).with_context(|| p.display().to_string())?)
                    .lines()
                    .collect::<io::Result<_>>()?,
                None => io::stdin().lock().lines().collect::<io::Result<_>>()?,
            };
            let lines: Vec<String> = if strip {
                lines.iter().map(|l| strip_punctuation(l)).collect()
            } else {
                lines
            };
            let restored = restorer.restore_batch(&lines)?;
            let mut out = output(out.as_deref())?;
            for line in &restored {
                writeln!(out, "{line}")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

/// 1 invalid manifest or usage, 2 unreadable source, 3 empty corpus,
/// 4 line or shape mismatch; anything else is 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    let core = err.chain().find_map(|e| e.downcast_ref::<Error>());
    match core {
        Some(Error::SourceUnreadable { .. }) => 2,
        Some(Error::EmptyCorpus) => 3,
        Some(Error::Shape(_)) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = err
                .chain()
                .find_map(|e| e.downcast_ref::<Error>())
                .map(|e| e.code())
                .unwrap_or("ERROR");
            eprintln!("error [{code}]: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
