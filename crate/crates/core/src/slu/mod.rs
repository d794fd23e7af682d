//! Intent classification: a bag of word unigrams and hashed bigrams,
//! averaged into a small embedding and fed to a linear layer, trained with
//! a softmax or one-vs-all loss.

mod experiment;
mod metrics;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use experiment::{format_table, robustness_experiment, run_condition, ComparisonRow, ComparisonTable, Condition};
pub use metrics::{sample_accuracy, sample_f1, score, Metrics};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, substream};
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub text: String,
    pub labels: Vec<String>,
}

impl LabeledExample {
    pub fn new(text: impl Into<String>, labels: &[&str]) -> Self {
        Self {
            text: text.into(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossMode {
    /// One intent per example.
    Softmax,
    /// Independent per-intent probabilities; allows several intents.
    OneVsAll,
}

impl std::str::FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax" => Ok(LossMode::Softmax),
            "one-vs-all" | "ova" => Ok(LossMode::OneVsAll),
            other => Err(Error::InvalidConfig(format!("unknown loss mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub mode: LossMode,
    pub dim: usize,
    pub n_buckets: usize,
    pub epochs: usize,
    /// Initial rate, decayed linearly to zero over all updates.
    pub learning_rate: f64,
    /// One-vs-all decision threshold.
    pub threshold: f64,
    /// Most intents a one-vs-all prediction returns.
    pub max_labels: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            mode: LossMode::Softmax,
            dim: 20,
            n_buckets: 1 << 18,
            epochs: 20,
            learning_rate: 0.5,
            threshold: 0.5,
            max_labels: 3,
        }
    }
}

fn fnv(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    config: ClassifierConfig,
    labels: Vec<String>,
    words: Vec<String>,
    seed: u64,
    rows: BTreeMap<usize, Vec<f64>>,
    output: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDoc", into = "ModelDoc")]
pub struct ClassifierModel {
    pub config: ClassifierConfig,
    /// Intent inventory, sorted.
    pub labels: Vec<String>,
    words: Vec<String>,
    word_index: HashMap<String, usize>,
    seed: u64,
    /// Trained feature rows. Rows never touched in training keep their
    /// seeded initial value, recomputed on demand.
    rows: BTreeMap<usize, Vec<f64>>,
    /// `output[k]` holds the weights of intent `k`.
    output: Vec<Vec<f64>>,
}

impl TryFrom<ModelDoc> for ClassifierModel {
    type Error = Error;

    fn try_from(doc: ModelDoc) -> Result<Self> {
        let dim = doc.config.dim;
        let bad_row = doc.rows.values().any(|r| r.len() != dim);
        if doc.output.len() != doc.labels.len() || doc.output.iter().any(|w| w.len() != dim) || bad_row {
            return Err(Error::Checkpoint("classifier weight shapes are inconsistent".into()));
        }
        let word_index = doc.words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(Self {
            config: doc.config,
            labels: doc.labels,
            words: doc.words,
            word_index,
            seed: doc.seed,
            rows: doc.rows,
            output: doc.output,
        })
    }
}

impl From<ClassifierModel> for ModelDoc {
    fn from(m: ClassifierModel) -> Self {
        ModelDoc {
            config: m.config,
            labels: m.labels,
            words: m.words,
            seed: m.seed,
            rows: m.rows,
            output: m.output,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub labels: Vec<String>,
    /// Every intent with its score, best first.
    pub scores: Vec<(String, f64)>,
}

/// Feature ids of a token list: known words map to their own row, unknown
/// words are dropped, and each adjacent pair hashes into one of `n_buckets`
/// rows placed after the word rows.
fn features(
    tokens: &[String],
    word_index: &HashMap<String, usize>,
    n_buckets: usize,
) -> Vec<usize> {
    let n_words = word_index.len();
    let mut out: Vec<usize> = tokens.iter().filter_map(|t| word_index.get(t).copied()).collect();
    for pair in tokens.windows(2) {
        let key = format!("{} {}", pair[0], pair[1]);
        out.push(n_words + (fnv(key.as_bytes()) % n_buckets as u64) as usize);
    }
    out
}

fn init_row(seed: u64, feature: usize, dim: usize) -> Vec<f64> {
    let mut rng = substream(seed, feature as u64);
    let bound = 1.0 / dim as f64;
    (0..dim).map(|_| rng.random_range(-bound..bound)).collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softmax(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
}

impl ClassifierModel {
    pub fn n_intents(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_ids(&self, text: &str) -> Vec<usize> {
        features(&tokenize(text), &self.word_index, self.config.n_buckets)
    }

    fn hidden(&self, feats: &[usize]) -> Vec<f64> {
        let dim = self.config.dim;
        let mut h = vec![0.0; dim];
        if feats.is_empty() {
            return h;
        }
        for &f in feats {
            match self.rows.get(&f) {
                Some(row) => h.iter_mut().zip(row).for_each(|(a, b)| *a += b),
                None => {
                    let row = init_row(self.seed, f, dim);
                    h.iter_mut().zip(&row).for_each(|(a, b)| *a += b);
                }
            }
        }
        let n = feats.len() as f64;
        h.iter_mut().for_each(|v| *v /= n);
        h
    }

    /// Per-intent scores in label order: a distribution in softmax mode,
    /// independent probabilities in one-vs-all mode.
    pub fn scores(&self, text: &str) -> Vec<f64> {
        let h = self.hidden(&self.feature_ids(text));
        let mut s: Vec<f64> = self
            .output
            .iter()
            .map(|w| w.iter().zip(&h).map(|(a, b)| a * b).sum())
            .collect();
        match self.config.mode {
            LossMode::Softmax => softmax(&mut s),
            LossMode::OneVsAll => s.iter_mut().for_each(|v| *v = sigmoid(*v)),
        }
        s
    }

    pub fn predict(&self, text: &str) -> Prediction {
        let scores = self.scores(text);
        let labels = decide(&scores, &self.config)
            .into_iter()
            .map(|k| self.labels[k].clone())
            .collect();
        let mut ranked: Vec<(String, f64)> = self.labels.iter().cloned().zip(scores).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Prediction { labels, scores: ranked }
    }

    pub fn evaluate(&self, test: &[LabeledExample]) -> Result<Metrics> {
        if test.is_empty() {
            return Err(Error::InvalidData("empty test set".into()));
        }
        let predicted: Vec<Vec<String>> = test.iter().map(|e| self.predict(&e.text).labels).collect();
        Ok(score(
            test.iter()
                .zip(&predicted)
                .map(|(e, p)| (e.labels.as_slice(), p.as_slice())),
        ))
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        Ok(serde_json::from_reader(input)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io_at(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_json(&mut w)?;
        w.flush().map_err(|e| Error::io_at(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io_at(path, e))?;
        Self::read_json(std::io::BufReader::new(file))
    }
}

/// Indices of the predicted intents. Softmax picks the argmax; one-vs-all
/// keeps scores above the threshold, best first and capped, falling back to
/// the single best intent when none clears it.
pub fn decide(scores: &[f64], cfg: &ClassifierConfig) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    match cfg.mode {
        LossMode::Softmax => order.into_iter().take(1).collect(),
        LossMode::OneVsAll => {
            let mut kept: Vec<usize> = order
                .iter()
                .copied()
                .filter(|&k| scores[k] > cfg.threshold)
                .take(cfg.max_labels.max(1))
                .collect();
            if kept.is_empty() {
                kept.extend(order.first());
            }
            kept
        }
    }
}

/// Per-epoch mean training loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub epoch_losses: Vec<f64>,
}

struct Encoded {
    rows: Vec<usize>,
    targets: Vec<usize>,
}

/// Fits a classifier by per-example gradient descent.
pub fn train_classifier(
    train: &[LabeledExample],
    cfg: &ClassifierConfig,
    seed: u64,
) -> Result<(ClassifierModel, ClassifierReport)> {
    if cfg.dim == 0 || cfg.n_buckets == 0 {
        return Err(Error::InvalidConfig("dim and n_buckets must be positive".into()));
    }
    let labels: Vec<String> = train
        .iter()
        .flat_map(|e| e.labels.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if labels.len() < 2 {
        return Err(Error::InvalidData(format!(
            "training data needs at least two intents, found {}",
            labels.len()
        )));
    }
    for (i, e) in train.iter().enumerate() {
        if e.labels.is_empty() {
            return Err(Error::InvalidData(format!("example {i} has no label")));
        }
        if cfg.mode == LossMode::Softmax && e.labels.len() != 1 {
            return Err(Error::InvalidData(format!(
                "example {i} has {} labels; softmax mode needs exactly one",
                e.labels.len()
            )));
        }
    }
    let label_index: HashMap<&str, usize> =
        labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();

    let tokenized: Vec<Vec<String>> = train.iter().map(|e| tokenize(&e.text)).collect();
    let words: Vec<String> = tokenized
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let word_index: HashMap<String, usize> =
        words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();

    // Dense storage for the features seen in training.
    let init_seed = derive_seed(seed, "slu-init");
    let dim = cfg.dim;
    let mut slot_of: HashMap<usize, usize> = HashMap::new();
    let mut slot_feature: Vec<usize> = Vec::new();
    let mut table: Vec<f64> = Vec::new();
    let mut data = Vec::with_capacity(train.len());
    for (tokens, e) in tokenized.iter().zip(train) {
        let rows = features(tokens, &word_index, cfg.n_buckets)
            .into_iter()
            .map(|f| {
                *slot_of.entry(f).or_insert_with(|| {
                    slot_feature.push(f);
                    table.extend(init_row(init_seed, f, dim));
                    slot_feature.len() - 1
                })
            })
            .collect();
        let targets = e.labels.iter().map(|l| label_index[l.as_str()]).collect();
        data.push(Encoded { rows, targets });
    }

    let n_out = labels.len();
    let mut output = vec![vec![0.0; dim]; n_out];
    let mut rng = seeded(derive_seed(seed, "slu-order"));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let total_updates = (cfg.epochs * data.len()).max(1) as f64;
    let mut done = 0usize;
    let mut report = ClassifierReport {
        epoch_losses: Vec::with_capacity(cfg.epochs),
    };
    let mut h = vec![0.0; dim];
    let mut grad_h = vec![0.0; dim];
    let mut scores = vec![0.0; n_out];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &i in &order {
            let ex = &data[i];
            let lr = cfg.learning_rate * (1.0 - done as f64 / total_updates);
            done += 1;
            if ex.rows.is_empty() {
                continue;
            }
            h.iter_mut().for_each(|v| *v = 0.0);
            for &r in &ex.rows {
                h.iter_mut().zip(&table[r * dim..(r + 1) * dim]).for_each(|(a, b)| *a += b);
            }
            let n = ex.rows.len() as f64;
            h.iter_mut().for_each(|v| *v /= n);
            for (s, w) in scores.iter_mut().zip(&output) {
                *s = w.iter().zip(&h).map(|(a, b)| a * b).sum();
            }
            grad_h.iter_mut().for_each(|v| *v = 0.0);
            // `scores` becomes d loss / d logit.
            match cfg.mode {
                LossMode::Softmax => {
                    softmax(&mut scores);
                    let y = ex.targets[0];
                    epoch_loss -= scores[y].max(1e-300).ln();
                    scores[y] -= 1.0;
                }
                LossMode::OneVsAll => {
                    for (k, s) in scores.iter_mut().enumerate() {
                        let p = sigmoid(*s);
                        let y = f64::from(u8::from(ex.targets.contains(&k)));
                        epoch_loss -= if y > 0.0 {
                            p.max(1e-300).ln()
                        } else {
                            (1.0 - p).max(1e-300).ln()
                        };
                        *s = p - y;
                    }
                }
            }
            for (g, w) in scores.iter().zip(output.iter_mut()) {
                for ((gh, wv), hv) in grad_h.iter_mut().zip(w.iter_mut()).zip(&h) {
                    *gh += g * *wv;
                    *wv -= lr * g * hv;
                }
            }
            for &r in &ex.rows {
                table[r * dim..(r + 1) * dim]
                    .iter_mut()
                    .zip(&grad_h)
                    .for_each(|(p, g)| *p -= lr * g / n);
            }
        }
        report.epoch_losses.push(epoch_loss / data.len() as f64);
    }

    let rows = slot_feature
        .iter()
        .enumerate()
        .map(|(slot, &f)| (f, table[slot * dim..(slot + 1) * dim].to_vec()))
        .collect();
    let model = ClassifierModel {
        config: *cfg,
        labels,
        words,
        word_index,
        seed: init_seed,
        rows,
        output,
    };
    Ok((model, report))
}
