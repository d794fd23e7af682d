//! A templated command corpus and a known word-level noise channel, used as
//! ground truth when real recognizer output is unavailable.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{collect_pairs, save_jsonl, KeyedText, PairStats};
use crate::confusion::CleanNoisyPair;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, substream};
use crate::slu::LabeledExample;
use crate::text::{tokenize, NormalizationPolicy};

/// Word-level corruption: each token is independently deleted, preceded by
/// a filler word, replaced by one of its listed confusions, or kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticChannel {
    /// Source word to `(replacement, probability)`; a replacement may span
    /// several words.
    pub substitutions: BTreeMap<String, Vec<(String, f64)>>,
    pub deletion: f64,
    pub insertion: f64,
    pub fillers: Vec<String>,
    pub seed: u64,
}

impl SyntheticChannel {
    /// A channel that never changes anything.
    pub fn identity(seed: u64) -> Self {
        Self {
            substitutions: BTreeMap::new(),
            deletion: 0.0,
            insertion: 0.0,
            fillers: Vec::new(),
            seed,
        }
    }

    /// Acoustic-looking confusions over the default command grammar.
    pub fn command_default(seed: u64) -> Self {
        let subs: &[(&str, &[(&str, f64)])] = &[
            ("on", &[("an", 0.2)]),
            ("off", &[("of", 0.2)]),
            ("up", &[("app", 0.15)]),
            ("down", &[("dawn", 0.1), ("town", 0.1)]),
            ("lights", &[("likes", 0.12), ("flights", 0.1)]),
            ("lamp", &[("lamb", 0.12), ("lump", 0.1)]),
            ("music", &[("magic", 0.2)]),
            ("radio", &[("rodeo", 0.2)]),
            ("song", &[("son", 0.12), ("long", 0.1)]),
            ("heat", &[("heed", 0.1), ("eat", 0.08), ("hit", 0.08)]),
            ("heating", &[("eating", 0.2)]),
            ("volume", &[("value", 0.12), ("column", 0.1)]),
            ("sound", &[("sand", 0.12), ("found", 0.1)]),
            ("increase", &[("in crease", 0.12), ("increased", 0.1)]),
            ("decrease", &[("the crease", 0.12), ("decreased", 0.1)]),
            ("raise", &[("race", 0.12), ("rays", 0.1)]),
            ("lower", &[("lover", 0.12), ("mower", 0.1)]),
            ("start", &[("star", 0.12), ("stark", 0.1)]),
            ("stop", &[("top", 0.12), ("stock", 0.1)]),
            ("switch", &[("which", 0.12), ("twitch", 0.08)]),
            ("turn", &[("term", 0.1), ("torn", 0.08)]),
            ("kitchen", &[("chicken", 0.2)]),
            ("bedroom", &[("bed room", 0.2)]),
            ("the", &[("a", 0.1)]),
            ("please", &[("police", 0.1)]),
            ("now", &[("no", 0.15)]),
        ];
        let substitutions = subs
            .iter()
            .map(|(w, c)| (w.to_string(), c.iter().map(|(r, p)| (r.to_string(), *p)).collect()))
            .collect();
        Self {
            substitutions,
            deletion: 0.03,
            insertion: 0.02,
            fillers: vec!["uh".into(), "um".into()],
            seed,
        }
    }

    pub fn substitution_probability(&self, word: &str) -> f64 {
        self.substitutions
            .get(word)
            .map_or(0.0, |c| c.iter().map(|(_, p)| p).sum())
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !unit(self.deletion) || !unit(self.insertion) {
            return Err(Error::InvalidConfig("channel probabilities must lie in [0, 1]".into()));
        }
        if self.insertion > 0.0 && self.fillers.is_empty() {
            return Err(Error::InvalidConfig("insertion needs at least one filler word".into()));
        }
        for (word, cands) in &self.substitutions {
            if cands.iter().any(|(_, p)| !unit(*p)) {
                return Err(Error::InvalidConfig(format!("bad substitution probability for {word:?}")));
            }
            let total = self.deletion + self.insertion + self.substitution_probability(word);
            if total > 1.0 + 1e-12 {
                return Err(Error::InvalidConfig(format!(
                    "event probabilities for {word:?} sum to {total}"
                )));
            }
        }
        Ok(())
    }

    /// Passes normalized `text` through the channel once.
    pub fn corrupt<R: Rng + ?Sized>(&self, text: &str, rng: &mut R) -> String {
        let mut out: Vec<String> = Vec::new();
        for token in tokenize(text) {
            let mut u: f64 = rng.random();
            if u < self.deletion {
                continue;
            }
            u -= self.deletion;
            if u < self.insertion {
                if let Some(f) = self.fillers.choose(rng) {
                    out.push(f.clone());
                }
                out.push(token);
                continue;
            }
            u -= self.insertion;
            let mut replaced = false;
            if let Some(cands) = self.substitutions.get(&token) {
                for (replacement, p) in cands {
                    if u < *p {
                        out.extend(replacement.split_whitespace().map(str::to_owned));
                        replaced = true;
                        break;
                    }
                    u -= p;
                }
            }
            if !replaced {
                out.push(token);
            }
        }
        out.join(" ")
    }

    /// Corrupts item `index` of a stream identified by `label`.
    pub fn corrupt_indexed(&self, text: &str, label: &str, index: usize) -> String {
        let mut rng = substream(derive_seed(self.seed, label), index as u64);
        self.corrupt(text, &mut rng)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io_at(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        let channel: Self = serde_json::from_str(&text)?;
        channel.validate()?;
        Ok(channel)
    }
}

/// One intent: phrase patterns with an `{obj}` slot and the slot fillers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentTemplate {
    pub label: String,
    pub patterns: Vec<String>,
    pub objects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grammar {
    pub intents: Vec<IntentTemplate>,
    /// Optional sentence openers; the empty string means none.
    pub prefixes: Vec<String>,
    pub suffixes: Vec<String>,
}

impl Default for Grammar {
    fn default() -> Self {
        let on = &["turn on the {obj}", "switch on the {obj}", "start the {obj}", "turn the {obj} on"][..];
        let off = &["turn off the {obj}", "switch off the {obj}", "stop the {obj}", "turn the {obj} off"][..];
        let up = &["increase the {obj}", "raise the {obj}", "turn up the {obj}", "turn the {obj} up"][..];
        let down = &["decrease the {obj}", "lower the {obj}", "turn down the {obj}", "turn the {obj} down"][..];
        let lights = &["lights", "lamp"][..];
        let music = &["music", "radio", "song"][..];
        let heat = &["heat", "heating", "temperature"][..];
        let volume = &["volume", "sound"][..];
        let intent = |label: &str, patterns: &[&str], objects: &[&str]| IntentTemplate {
            label: label.into(),
            patterns: patterns.iter().map(|s| s.to_string()).collect(),
            objects: objects.iter().map(|s| s.to_string()).collect(),
        };
        let words = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            intents: vec![
                intent("activate_lights", on, lights),
                intent("deactivate_lights", off, lights),
                intent("activate_music", on, music),
                intent("deactivate_music", off, music),
                intent("increase_heat", up, heat),
                intent("decrease_heat", down, heat),
                intent("increase_volume", up, volume),
                intent("decrease_volume", down, volume),
            ],
            prefixes: words(&["", "", "", "please", "can you", "could you", "i want to", "hey", "i would like to"]),
            suffixes: words(&[
                "", "", "", "in the kitchen", "in the bedroom", "in the living room", "now", "a little bit", "please",
            ]),
        }
    }
}

impl Grammar {
    pub fn labels(&self) -> Vec<String> {
        self.intents.iter().map(|i| i.label.clone()).collect()
    }

    /// Every word the grammar can emit.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        let mut words = BTreeSet::new();
        let mut add = |s: &str| words.extend(tokenize(&s.replace("{obj}", " ")));
        for i in &self.intents {
            i.patterns.iter().for_each(|p| add(p));
            i.objects.iter().for_each(|o| add(o));
        }
        self.prefixes.iter().for_each(|p| add(p));
        self.suffixes.iter().for_each(|s| add(s));
        words
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LabeledExample {
        let intent = self.intents.choose(rng).expect("grammar has intents");
        let pattern = intent.patterns.choose(rng).expect("intent has patterns");
        let object = intent.objects.choose(rng).expect("intent has objects");
        let prefix = self.prefixes.choose(rng).map_or("", String::as_str);
        let suffix = self.suffixes.choose(rng).map_or("", String::as_str);
        let core = pattern.replace("{obj}", object);
        let text = [prefix, core.as_str(), suffix]
            .iter()
            .filter(|s| !s.is_empty())
            .copied()
            .collect::<Vec<_>>()
            .join(" ");
        LabeledExample {
            text,
            labels: vec![intent.label.clone()],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.intents.len() < 2 {
            return Err(Error::InvalidConfig("grammar needs at least two intents".into()));
        }
        if self.intents.iter().any(|i| i.patterns.is_empty() || i.objects.is_empty()) {
            return Err(Error::InvalidConfig("every intent needs patterns and objects".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkSizes {
    /// Sentences passed through the channel to build the pair corpus,
    /// before unchanged ones are dropped.
    pub pair_sentences: usize,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl Default for BenchmarkSizes {
    fn default() -> Self {
        Self {
            pair_sentences: 3000,
            train: 2000,
            dev: 200,
            test: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBenchmark {
    pub channel: SyntheticChannel,
    pub grammar: Grammar,
    /// Clean references and channel outputs keyed by utterance id.
    pub references: Vec<KeyedText>,
    pub hypotheses: Vec<KeyedText>,
    pub pairs: Vec<CleanNoisyPair>,
    pub pair_stats: PairStats,
    pub train: Vec<LabeledExample>,
    pub dev: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
    /// `test` passed through the channel once.
    pub test_noisy: Vec<LabeledExample>,
}

impl SyntheticBenchmark {
    /// Writes every part as a separate file under `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io_at(dir, e))?;
        save_jsonl(&self.references, dir.join("refs.jsonl"))?;
        save_jsonl(&self.hypotheses, dir.join("hyps.jsonl"))?;
        save_jsonl(&self.pairs, dir.join("pairs.jsonl"))?;
        save_jsonl(&self.train, dir.join("train.jsonl"))?;
        save_jsonl(&self.dev, dir.join("dev.jsonl"))?;
        save_jsonl(&self.test, dir.join("test.jsonl"))?;
        save_jsonl(&self.test_noisy, dir.join("test-noisy.jsonl"))?;
        self.channel.save(dir.join("channel.json"))?;
        let path = dir.join("grammar.json");
        let mut f = std::fs::File::create(&path).map_err(|e| Error::io_at(&path, e))?;
        serde_json::to_writer_pretty(&mut f, &self.grammar)?;
        f.write_all(b"\n").map_err(|e| Error::io_at(&path, e))
    }
}

fn sample_split(grammar: &Grammar, n: usize, seed: u64, label: &str) -> Vec<LabeledExample> {
    let mut rng = seeded(derive_seed(seed, label));
    (0..n).map(|_| grammar.sample(&mut rng)).collect()
}

/// Draws the pair corpus and the SLU splits from `grammar`, and corrupts
/// the pair sentences and the test split with `channel`.
pub fn make_synthetic_benchmark(
    channel: &SyntheticChannel,
    grammar: &Grammar,
    sizes: BenchmarkSizes,
) -> Result<SyntheticBenchmark> {
    channel.validate()?;
    grammar.validate()?;
    let vocab = grammar.vocabulary();
    if let Some(w) = channel.substitutions.keys().find(|w| !vocab.contains(*w)) {
        return Err(Error::InvalidConfig(format!(
            "channel word {w:?} never occurs in the grammar"
        )));
    }
    let seed = channel.seed;
    let sentences = sample_split(grammar, sizes.pair_sentences, seed, "pair-sentences");
    let references: Vec<KeyedText> = sentences
        .iter()
        .enumerate()
        .map(|(i, e)| KeyedText::new(format!("utt{i:06}"), e.text.clone()))
        .collect();
    let hypotheses: Vec<KeyedText> = references
        .iter()
        .enumerate()
        .map(|(i, r)| KeyedText::new(r.id.clone(), channel.corrupt_indexed(&r.text, "pairs", i)))
        .collect();
    let (pairs, pair_stats) = collect_pairs(&references, &hypotheses, NormalizationPolicy::default());

    let train = sample_split(grammar, sizes.train, seed, "train");
    let dev = sample_split(grammar, sizes.dev, seed, "dev");
    let test = sample_split(grammar, sizes.test, seed, "test");
    let test_noisy = test
        .iter()
        .enumerate()
        .map(|(i, e)| LabeledExample {
            text: channel.corrupt_indexed(&e.text, "test", i),
            labels: e.labels.clone(),
        })
        .collect();
    Ok(SyntheticBenchmark {
        channel: channel.clone(),
        grammar: grammar.clone(),
        references,
        hypotheses,
        pairs,
        pair_stats,
        train,
        dev,
        test,
        test_noisy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_channel_changes_nothing() {
        let bench = make_synthetic_benchmark(
            &SyntheticChannel::identity(1),
            &Grammar::default(),
            BenchmarkSizes {
                pair_sentences: 50,
                train: 10,
                dev: 5,
                test: 20,
            },
        )
        .unwrap();
        assert!(bench.pairs.is_empty());
        assert_eq!(bench.pair_stats.matched, 50);
        for (c, n) in bench.test.iter().zip(&bench.test_noisy) {
            assert_eq!(c.text, n.text);
        }
    }

    #[test]
    fn certain_substitution_always_fires() {
        let mut ch = SyntheticChannel::identity(2);
        ch.substitutions.insert("stop".into(), vec![("top".into(), 1.0)]);
        let mut rng = seeded(0);
        for _ in 0..20 {
            assert_eq!(ch.corrupt("stop the music stop", &mut rng), "top the music top");
        }
    }

    #[test]
    fn empirical_substitution_rate() {
        let ch = SyntheticChannel::command_default(3);
        let target = ch.substitution_probability("music");
        let mut rng = seeded(4);
        let n = 10_000;
        let hits = (0..n).filter(|_| ch.corrupt("music", &mut rng) == "magic").count();
        assert!((hits as f64 / n as f64 - target).abs() < 0.02);
    }

    #[test]
    fn default_channel_and_grammar_are_consistent() {
        let ch = SyntheticChannel::command_default(0);
        ch.validate().unwrap();
        let bench = make_synthetic_benchmark(&ch, &Grammar::default(), BenchmarkSizes {
            pair_sentences: 300,
            train: 40,
            dev: 10,
            test: 40,
        })
        .unwrap();
        assert_eq!(bench.train.len(), 40);
        assert_eq!(bench.pair_stats.kept, bench.pairs.len());
        assert!(bench.pairs.len() > 100);
        let labels: BTreeSet<_> = bench.train.iter().map(|e| e.labels[0].clone()).collect();
        assert!(labels.len() >= 6);
        let dict = crate::lexicon::PronouncingDict::bundled();
        for w in Grammar::default().vocabulary() {
            assert!(dict.contains(&w), "{w} missing from the bundled dictionary");
        }
        for cands in ch.substitutions.values() {
            for (r, _) in cands {
                for w in r.split_whitespace() {
                    assert!(dict.contains(w), "{w} missing from the bundled dictionary");
                }
            }
        }
    }

    #[test]
    fn invalid_channels() {
        let mut ch = SyntheticChannel::identity(0);
        ch.deletion = 0.6;
        ch.substitutions.insert("a".into(), vec![("b".into(), 0.5)]);
        assert!(ch.validate().is_err());
        let mut ch = SyntheticChannel::identity(0);
        ch.insertion = 0.1;
        assert!(ch.validate().is_err());
        let mut ch = SyntheticChannel::identity(0);
        ch.substitutions.insert("zebra".into(), vec![("debra".into(), 0.5)]);
        assert!(make_synthetic_benchmark(&ch, &Grammar::default(), BenchmarkSizes::default()).is_err());
    }

    #[test]
    fn channel_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ch = SyntheticChannel::command_default(9);
        let path = dir.path().join("c.json");
        ch.save(&path).unwrap();
        assert_eq!(SyntheticChannel::load(&path).unwrap(), ch);
    }
}
