//! Windowed multiclass averaged perceptron for punctuation restoration.
//!
//! Each word position is classified independently from a sparse set of
//! string features over a five-word window. Restoring text only ever appends
//! marks to the input words, so the word sequence is preserved exactly.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::labeler::{reconstruct, Label, LabeledSample};
use crate::marks::is_target_mark;
use crate::rng::SeededRng;

const CLASSES: usize = Label::ALL.len();

pub const MODEL_FORMAT: &str = "punctkit-perceptron";
pub const MODEL_VERSION: u32 = 1;

/// Versioned description of the feature template. Its hash is stored in the
/// model file and checked on load.
pub const FEATURE_TEMPLATE: &str =
    "v1:w0,w-1,w+1,w-2,w+2,suffix1..3,first,last,len{1,2,3,4-5,6-8,9+}";

const BOS: &str = "<BOS>";
const EOS: &str = "<EOS>";

pub fn feature_config_hash() -> String {
    hex::encode(Sha256::digest(FEATURE_TEMPLATE.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector(pub Vec<String>);

fn length_bucket(len: usize) -> &'static str {
    match len {
        0 | 1 => "1",
        2 => "2",
        3 => "3",
        4..=5 => "4-5",
        6..=8 => "6-8",
        _ => "9+",
    }
}

pub fn featurize<S: AsRef<str>>(words: &[S], i: usize) -> Result<FeatureVector> {
    if i >= words.len() {
        return Err(Error::Index {
            index: i,
            len: words.len(),
        });
    }
    let at = |offset: isize| -> &str {
        let j = i as isize + offset;
        if j < 0 {
            BOS
        } else if j as usize >= words.len() {
            EOS
        } else {
            words[j as usize].as_ref()
        }
    };
    let word = words[i].as_ref();
    let mut feats = vec![
        format!("w0={word}"),
        format!("w-1={}", at(-1)),
        format!("w+1={}", at(1)),
        format!("w-2={}", at(-2)),
        format!("w+2={}", at(2)),
    ];
    let chars: Vec<char> = word.chars().collect();
    for k in 1..=3.min(chars.len()) {
        let suffix: String = chars[chars.len() - k..].iter().collect();
        feats.push(format!("suf{k}={suffix}"));
    }
    if i == 0 {
        feats.push("first".into());
    }
    if i + 1 == words.len() {
        feats.push("last".into());
    }
    feats.push(format!("len={}", length_bucket(chars.len())));
    Ok(FeatureVector(feats))
}

#[derive(Debug, Clone, Default)]
struct FeatureState {
    weights: [f64; CLASSES],
    totals: [f64; CLASSES],
    stamps: [u64; CLASSES],
}

struct Trainer {
    features: HashMap<String, FeatureState>,
    instances: u64,
}

impl Trainer {
    fn scores(&self, feats: &FeatureVector) -> [f64; CLASSES] {
        let mut scores = [0.0; CLASSES];
        for f in &feats.0 {
            if let Some(state) = self.features.get(f) {
                for (s, w) in scores.iter_mut().zip(&state.weights) {
                    *s += w;
                }
            }
        }
        scores
    }

    fn update(&mut self, truth: Label, guess: Label, feats: &FeatureVector) {
        self.instances += 1;
        if truth == guess {
            return;
        }
        // the new weight is in effect from this instance on; instances
        // stamps+1 ..= now-1 are settled at the old weight first
        let settled = self.instances - 1;
        for f in &feats.0 {
            let state = self.features.entry(f.clone()).or_default();
            for (class, delta) in [(truth.index(), 1.0), (guess.index(), -1.0)] {
                state.totals[class] += (settled - state.stamps[class]) as f64 * state.weights[class];
                state.stamps[class] = settled;
                state.weights[class] += delta;
            }
        }
    }

    /// Mean over all instances of the weight in effect after each one.
    fn averaged(self) -> BTreeMap<String, [f64; CLASSES]> {
        let now = self.instances.max(1);
        let mut out = BTreeMap::new();
        for (name, state) in self.features {
            let avg: [f64; CLASSES] = std::array::from_fn(|c| {
                let total = state.totals[c] + (now - state.stamps[c]) as f64 * state.weights[c];
                total / now as f64
            });
            if avg.iter().any(|&w| w != 0.0) {
                out.insert(name, avg);
            }
        }
        out
    }
}

fn argmax(scores: &[f64; CLASSES]) -> Label {
    let mut best = 0;
    for c in 1..CLASSES {
        // strict comparison keeps the earlier class on ties
        if scores[c] > scores[best] {
            best = c;
        }
    }
    Label::ALL[best]
}

/// Training-time guess: `truth` when it strictly beats every other class,
/// else the best other class. Ties count as mistakes, so a word that is only
/// right by tie-breaking still gets weight of its own.
fn rival(scores: &[f64; CLASSES], truth: Label) -> Label {
    let t = truth.index();
    let mut best: Option<usize> = None;
    for c in 0..CLASSES {
        if c != t && best.is_none_or(|b| scores[c] > scores[b]) {
            best = Some(c);
        }
    }
    let best = best.expect("more than one class");
    if scores[t] > scores[best] {
        truth
    } else {
        Label::ALL[best]
    }
}

/// Serialized model: averaged weights plus everything needed to check the
/// file matches this build's feature template and class list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptronModel {
    pub format: String,
    pub version: u32,
    pub feature_template: String,
    pub feature_config_hash: String,
    pub classes: Vec<Label>,
    pub epochs: usize,
    pub seed: u64,
    pub weights: BTreeMap<String, [f64; CLASSES]>,
}

impl PerceptronModel {
    /// A model with no weights; predicts EMPTY everywhere.
    pub fn empty() -> Self {
        PerceptronModel {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            feature_template: FEATURE_TEMPLATE.into(),
            feature_config_hash: feature_config_hash(),
            classes: Label::ALL.to_vec(),
            epochs: 0,
            seed: 0,
            weights: BTreeMap::new(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(Error::Model(format!("unsupported format {} v{}", self.format, self.version)));
        }
        if self.feature_config_hash != feature_config_hash() {
            return Err(Error::Model(format!(
                "feature template mismatch: file has {:?}",
                self.feature_template
            )));
        }
        if self.classes != Label::ALL {
            return Err(Error::Model(format!("unexpected class list {:?}", self.classes)));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut bytes = serde_json::to_vec(self)?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let model: PerceptronModel =
            serde_json::from_slice(bytes).map_err(|e| Error::Model(e.to_string()))?;
        model.check()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    fn scores(&self, feats: &FeatureVector) -> [f64; CLASSES] {
        let mut scores = [0.0; CLASSES];
        for f in &feats.0 {
            if let Some(w) = self.weights.get(f) {
                for (s, w) in scores.iter_mut().zip(w) {
                    *s += w;
                }
            }
        }
        scores
    }
}

/// Trains over `epochs` passes, visiting samples in a freshly shuffled order
/// each pass.
pub fn train(samples: &[LabeledSample], epochs: usize, seed: u64) -> Result<PerceptronModel> {
    if samples.is_empty() || samples.iter().all(|s| s.words.is_empty()) {
        return Err(Error::NoData);
    }
    if epochs == 0 {
        return Err(Error::NoData);
    }
    for s in samples {
        if s.words.len() != s.labels.len() {
            return Err(Error::Shape(format!("{} words but {} labels", s.words.len(), s.labels.len())));
        }
    }
    let features: Vec<Vec<FeatureVector>> = samples
        .iter()
        .map(|s| (0..s.words.len()).map(|i| featurize(&s.words, i)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let mut trainer = Trainer {
        features: HashMap::new(),
        instances: 0,
    };
    let mut rng = SeededRng::new(seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for _ in 0..epochs {
        rng.shuffle(&mut order);
        for &k in &order {
            for (feats, &truth) in features[k].iter().zip(&samples[k].labels) {
                let guess = rival(&trainer.scores(feats), truth);
                trainer.update(truth, guess, feats);
            }
        }
    }
    Ok(PerceptronModel {
        epochs,
        seed,
        weights: trainer.averaged(),
        ..PerceptronModel::empty()
    })
}

pub fn predict<S: AsRef<str>>(model: &PerceptronModel, words: &[S]) -> Vec<Label> {
    (0..words.len())
        .map(|i| {
            let feats = featurize(words, i).expect("index in range");
            argmax(&model.scores(&feats))
        })
        .collect()
}

/// Punctuates plain text. The output, with marks stripped, is exactly the
/// whitespace-normalized input.
pub fn restore(model: &PerceptronModel, plain_text: &str) -> Result<String> {
    if plain_text.chars().any(is_target_mark) {
        return Err(Error::AlreadyPunctuated(plain_text.to_owned()));
    }
    let words: Vec<String> = plain_text.split_whitespace().map(str::to_owned).collect();
    let labels = predict(model, &words);
    reconstruct(&LabeledSample::new(words, labels)?)
}

/// Anything that turns unpunctuated lines into punctuated lines, one output
/// line per input line, in order.
pub trait Restorer {
    fn restore_line(&self, line: &str) -> Result<String>;

    fn restore_batch(&self, lines: &[String]) -> Result<Vec<String>> {
        lines.iter().map(|l| self.restore_line(l)).collect()
    }
}

impl Restorer for PerceptronModel {
    fn restore_line(&self, line: &str) -> Result<String> {
        restore(self, line)
    }
}

/// An external restorer process: all lines go to its stdin, and it must
/// print exactly one line per input line on stdout.
#[derive(Debug, Clone)]
pub struct CommandRestorer {
    pub program: String,
    pub args: Vec<String>,
}

impl CommandRestorer {
    /// Splits a command line on whitespace; no shell quoting is supported.
    pub fn parse(command: &str) -> Result<Self> {
        let mut parts = command.split_whitespace().map(str::to_owned);
        let program = parts
            .next()
            .ok_or_else(|| Error::Restorer("empty restorer command".into()))?;
        Ok(CommandRestorer {
            program,
            args: parts.collect(),
        })
    }
}

impl Restorer for CommandRestorer {
    fn restore_line(&self, line: &str) -> Result<String> {
        let mut out = self.restore_batch(&[line.to_owned()])?;
        Ok(out.pop().unwrap_or_default())
    }

    fn restore_batch(&self, lines: &[String]) -> Result<Vec<String>> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Restorer(format!("{}: {e}", self.program)))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let payload: String = lines.iter().flat_map(|l| [l.as_str(), "\n"]).collect();
        let writer = std::thread::spawn(move || stdin.write_all(payload.as_bytes()));
        let mut stdout = String::new();
        child
            .stdout
            .take()
            .expect("piped stdout")
            .read_to_string(&mut stdout)?;
        let status = child.wait()?;
        writer
            .join()
            .map_err(|_| Error::Restorer("stdin writer panicked".into()))??;
        if !status.success() {
            return Err(Error::Restorer(format!("{} exited with {status}", self.program)));
        }
        let out: Vec<String> = stdout.lines().map(str::to_owned).collect();
        if out.len() != lines.len() {
            return Err(Error::Restorer(format!(
                "{} returned {} lines for {} inputs",
                self.program,
                out.len(),
                lines.len()
            )));
        }
        Ok(out)
    }
}

/// Streams `input` through `restorer` line by line. Returns the line count.
pub fn restore_lines<R: BufRead, W: Write>(restorer: &dyn Restorer, input: R, output: W) -> Result<usize> {
    let lines: Vec<String> = input.lines().collect::<std::io::Result<_>>()?;
    let restored = restorer.restore_batch(&lines)?;
    let mut out = BufWriter::new(output);
    for line in &restored {
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(restored.len())
}
