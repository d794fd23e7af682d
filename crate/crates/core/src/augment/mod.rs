//! Noise injection over corpora: candidate generation by any of the four
//! methods, phone-edit-rate scoring, threshold filtering and selection.

mod eda;
mod per;
mod substitute;

use std::fmt;
use std::str::FromStr;

use log::info;
use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use eda::{eda_augment, eda_edit, eda_intensity, EdaOp};
pub use per::{per_alignment, per_score};
pub use substitute::substitute_augment;

use crate::confusion::ConfusionTable;
use crate::error::{Error, Result};
use crate::generator::{GenerationConfig, NoiseGenerator};
use crate::lexicon::PronouncingDict;
use crate::rng::{derive_seed, substream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Phonetic-neighbour substitution.
    Rs,
    /// Confusion-statistics substitution.
    Ss,
    Eda,
    /// The trained noise generation model.
    Ngm,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Rs => "rs",
            Method::Ss => "ss",
            Method::Eda => "eda",
            Method::Ngm => "ngm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rs" => Ok(Method::Rs),
            "ss" => Ok(Method::Ss),
            "eda" => Ok(Method::Eda),
            "ngm" => Ok(Method::Ngm),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub method: Method,
    /// Candidates generated per sentence before filtering.
    pub n_candidates: usize,
    /// Candidates kept per sentence after filtering.
    pub n_aug: usize,
    /// Per-position substitution probability for RS and SS.
    pub substitute_proportion: f64,
    /// Candidates with a phone edit rate above this are discarded;
    /// `f64::INFINITY` disables filtering.
    pub per_threshold: f64,
    pub seed: u64,
    pub generation: GenerationConfig,
    /// Worker threads; 0 or 1 runs sequentially.
    pub jobs: usize,
}

impl AugmentConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            n_candidates: 5,
            n_aug: 1,
            substitute_proportion: 0.1,
            per_threshold: 1.0,
            seed: 0,
            generation: GenerationConfig::default(),
            jobs: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_aug > self.n_candidates {
            return Err(Error::InvalidConfig(format!(
                "n_aug ({}) exceeds n_candidates ({})",
                self.n_aug, self.n_candidates
            )));
        }
        if !(0.0..=1.0).contains(&self.substitute_proportion) {
            return Err(Error::InvalidConfig(format!(
                "substitute proportion {} outside [0, 1]",
                self.substitute_proportion
            )));
        }
        if self.per_threshold.is_nan() || self.per_threshold < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "PER threshold must be non-negative, got {}",
                self.per_threshold
            )));
        }
        self.generation.validate()
    }
}

/// What each method needs beyond the dictionary.
#[derive(Clone, Copy)]
pub struct Resources<'a> {
    pub dict: &'a PronouncingDict,
    pub table: Option<&'a ConfusionTable>,
    pub generator: Option<&'a NoiseGenerator>,
    /// Replacement and insertion words for EDA.
    pub eda_vocab: &'a [String],
}

impl<'a> Resources<'a> {
    pub fn new(dict: &'a PronouncingDict) -> Self {
        Self {
            dict,
            table: None,
            generator: None,
            eda_vocab: &[],
        }
    }

    fn check(&self, method: Method) -> Result<()> {
        let missing = match method {
            Method::Rs | Method::Ss if self.table.is_none() => Some("a confusion table"),
            Method::Ngm if self.generator.is_none() => Some("a trained generator"),
            Method::Eda if self.eda_vocab.is_empty() => Some("an EDA vocabulary"),
            _ => None,
        };
        match missing {
            Some(what) => Err(Error::InvalidConfig(format!("method {method} needs {what}"))),
            None => Ok(()),
        }
    }
}

/// One input line: unlabeled `{"text"}` or labeled `{"text", "labels"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl InputRecord {
    pub fn unlabeled(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            labels: None,
        }
    }

    pub fn labeled(text: impl Into<String>, labels: Vec<String>) -> Self {
        Self {
            text: text.into(),
            labels: Some(labels),
        }
    }
}

/// One output line. Originals carry only the input fields; generated lines
/// add method, phone edit rate and the index of their source line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub augmented: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_index: Option<usize>,
}

/// A scored candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSample {
    pub source_index: usize,
    pub original: String,
    pub generated: String,
    pub per: f64,
    pub method: Method,
    /// Passed the threshold and was selected for output.
    pub kept: bool,
}

/// Scored candidates of one input sentence, before selection.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    pub source_index: usize,
    pub input: InputRecord,
    /// `(text, per)`; empty when the sentence bypassed augmentation.
    pub candidates: Vec<(String, f64)>,
    pub bypassed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentStats {
    pub inputs: usize,
    /// Sentences with no phones in the dictionary, emitted unaugmented.
    pub bypassed: usize,
    /// Sentences whose every candidate exceeded the threshold.
    pub all_filtered: usize,
    pub candidates: usize,
    pub kept: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentOutput {
    pub samples: Vec<NoiseSample>,
    pub records: Vec<OutputRecord>,
    pub stats: AugmentStats,
}

fn one_candidate(
    text: &str,
    cfg: &AugmentConfig,
    res: &Resources<'_>,
    rng: &mut crate::rng::Rng,
) -> Result<String> {
    Ok(match cfg.method {
        Method::Rs | Method::Ss => {
            let table = res.table.expect("checked by Resources::check");
            substitute_augment(table, text, cfg.substitute_proportion, rng)
        }
        Method::Eda => eda_augment(text, res.eda_vocab, rng),
        Method::Ngm => {
            let generator = res.generator.expect("checked by Resources::check");
            generator.generate(text, &cfg.generation, rng)?.text
        }
    })
}

fn build_pool(
    index: usize,
    input: &InputRecord,
    cfg: &AugmentConfig,
    res: &Resources<'_>,
) -> CandidatePool {
    let mut pool = CandidatePool {
        source_index: index,
        input: input.clone(),
        candidates: Vec::new(),
        bypassed: false,
    };
    if res.dict.phones(&input.text).is_empty() {
        pool.bypassed = true;
        return pool;
    }
    let mut rng = substream(derive_seed(cfg.seed, cfg.method.as_str()), index as u64);
    for _ in 0..cfg.n_candidates {
        match one_candidate(&input.text, cfg, res, &mut rng) {
            Ok(text) => {
                let per = per_score(res.dict, &input.text, &text)
                    .expect("original has phones, checked above");
                pool.candidates.push((text, per));
            }
            Err(e) => info!("sentence {index}: candidate generation failed: {e}"),
        }
    }
    pool
}

fn run_indexed<T: Send, F>(n: usize, jobs: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
{
    if jobs <= 1 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

/// Generates and scores `n_candidates` noisy candidates per input.
///
/// Sentence `i` draws from its own random stream derived from the seed and
/// `i`, so pools do not depend on `jobs` or scheduling.
pub fn generate_candidates(
    inputs: &[InputRecord],
    cfg: &AugmentConfig,
    res: &Resources<'_>,
) -> Result<Vec<CandidatePool>> {
    cfg.validate()?;
    res.check(cfg.method)?;
    Ok(run_indexed(inputs.len(), cfg.jobs, |i| {
        build_pool(i, &inputs[i], cfg, res)
    }))
}

/// Filters each pool by `per_threshold` and keeps up to `n_aug` survivors
/// chosen uniformly at random, in candidate order.
pub fn select_from_pools(pools: &[CandidatePool], cfg: &AugmentConfig) -> AugmentOutput {
    let mut out = AugmentOutput {
        samples: Vec::new(),
        records: Vec::new(),
        stats: AugmentStats {
            inputs: pools.len(),
            ..AugmentStats::default()
        },
    };
    let select_seed = derive_seed(cfg.seed, "select");
    for pool in pools {
        out.records.push(OutputRecord {
            text: pool.input.text.clone(),
            labels: pool.input.labels.clone(),
            augmented: false,
            method: None,
            per: None,
            source_index: None,
        });
        if pool.bypassed {
            out.stats.bypassed += 1;
            info!("sentence {}: no known phones, emitted unaugmented", pool.source_index);
            continue;
        }
        out.stats.candidates += pool.candidates.len();
        let survivors: Vec<usize> = pool
            .candidates
            .iter()
            .enumerate()
            .filter(|(_, (_, per))| *per <= cfg.per_threshold)
            .map(|(i, _)| i)
            .collect();
        if survivors.is_empty() && !pool.candidates.is_empty() {
            out.stats.all_filtered += 1;
            info!(
                "sentence {}: all {} candidates exceeded PER {}",
                pool.source_index,
                pool.candidates.len(),
                cfg.per_threshold
            );
        }
        let mut rng = substream(select_seed, pool.source_index as u64);
        let take = cfg.n_aug.min(survivors.len());
        let mut chosen: Vec<usize> = sample_indices(&mut rng, survivors.len(), take)
            .into_iter()
            .map(|k| survivors[k])
            .collect();
        chosen.sort_unstable();
        for (i, (text, per)) in pool.candidates.iter().enumerate() {
            let kept = chosen.binary_search(&i).is_ok();
            out.samples.push(NoiseSample {
                source_index: pool.source_index,
                original: pool.input.text.clone(),
                generated: text.clone(),
                per: *per,
                method: cfg.method,
                kept,
            });
            if kept {
                out.stats.kept += 1;
                out.records.push(OutputRecord {
                    text: text.clone(),
                    labels: pool.input.labels.clone(),
                    augmented: true,
                    method: Some(cfg.method),
                    per: Some(*per),
                    source_index: Some(pool.source_index),
                });
            }
        }
    }
    out
}

/// Generate, score, filter and select: the full augmentation pass. The
/// output lists every original followed by its selected noisy versions,
/// each carrying the original's labels.
pub fn augment_corpus(
    inputs: &[InputRecord],
    cfg: &AugmentConfig,
    res: &Resources<'_>,
) -> Result<AugmentOutput> {
    let pools = generate_candidates(inputs, cfg, res)?;
    Ok(select_from_pools(&pools, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confusion::{Candidate, Provenance};

    fn ss_table() -> ConfusionTable {
        let mut t = ConfusionTable::new(Provenance::Statistic);
        t.add("tied", Candidate::Tokens("told".into()), 3.0).unwrap();
        t.add("tied", Candidate::Tokens("down".into()), 1.0).unwrap();
        t.add("knot", Candidate::Tokens("night".into()), 2.0).unwrap();
        t.add("the knot", Candidate::Tokens("you you".into()), 1.0).unwrap();
        t
    }

    fn inputs() -> Vec<InputRecord> {
        vec![
            InputRecord::labeled("The priest tied the knot.", vec!["wed".into()]),
            InputRecord::labeled("tied the knot", vec!["wed".into(), "x".into()]),
            InputRecord::labeled("42", vec!["num".into()]),
        ]
    }

    fn cfg(alpha: f64) -> AugmentConfig {
        AugmentConfig {
            n_candidates: 5,
            n_aug: 2,
            substitute_proportion: 0.5,
            per_threshold: alpha,
            seed: 3,
            ..AugmentConfig::new(Method::Ss)
        }
    }

    #[test]
    fn kept_samples_respect_threshold() {
        let dict = PronouncingDict::bundled();
        let table = ss_table();
        let res = Resources {
            table: Some(&table),
            ..Resources::new(&dict)
        };
        for alpha in [0.0, 0.1, 0.3, 1.0, f64::INFINITY] {
            let out = augment_corpus(&inputs(), &cfg(alpha), &res).unwrap();
            for s in &out.samples {
                let again = per_score(&dict, &s.original, &s.generated).unwrap();
                assert_eq!(again, s.per);
                if s.kept {
                    assert!(s.per <= alpha);
                }
            }
            assert!(out.records.len() <= inputs().len() * (1 + 2));
        }
    }

    #[test]
    fn zero_threshold_keeps_only_phonetic_copies() {
        let dict = PronouncingDict::bundled();
        let table = ss_table();
        let res = Resources {
            table: Some(&table),
            ..Resources::new(&dict)
        };
        let out = augment_corpus(&inputs(), &cfg(0.0), &res).unwrap();
        for r in out.records.iter().filter(|r| r.augmented) {
            assert_eq!(r.per, Some(0.0));
        }
    }

    #[test]
    fn unfiltered_output_size_is_exact() {
        let dict = PronouncingDict::bundled();
        let table = ss_table();
        let res = Resources {
            table: Some(&table),
            ..Resources::new(&dict)
        };
        let out = augment_corpus(&inputs()[..2], &cfg(f64::INFINITY), &res).unwrap();
        assert_eq!(out.records.len(), 2 * (1 + 2));
        assert_eq!(out.stats.kept, 4);
    }

    #[test]
    fn labels_carry_over_and_oov_bypasses() {
        let dict = PronouncingDict::bundled();
        let table = ss_table();
        let res = Resources {
            table: Some(&table),
            ..Resources::new(&dict)
        };
        let out = augment_corpus(&inputs(), &cfg(1.0), &res).unwrap();
        for r in out.records.iter().filter(|r| r.augmented) {
            let src = &inputs()[r.source_index.unwrap()];
            assert_eq!(r.labels, src.labels);
            assert_eq!(r.method, Some(Method::Ss));
        }
        // "42" has only an unknown phone, which still counts as a phone.
        assert_eq!(out.stats.bypassed, 0);
        let empty = [InputRecord::unlabeled("?!")];
        let out = augment_corpus(&empty, &cfg(1.0), &res).unwrap();
        assert_eq!(out.stats.bypassed, 1);
        assert_eq!(out.records.len(), 1);
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let dict = PronouncingDict::bundled();
        let table = ss_table();
        let res = Resources {
            table: Some(&table),
            ..Resources::new(&dict)
        };
        let a = augment_corpus(&inputs(), &cfg(1.0), &res).unwrap();
        let mut c = cfg(1.0);
        c.jobs = 3;
        let b = augment_corpus(&inputs(), &c, &res).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_resources_and_bad_config() {
        let dict = PronouncingDict::bundled();
        let res = Resources::new(&dict);
        assert!(augment_corpus(&inputs(), &cfg(1.0), &res).is_err());
        let mut bad = cfg(1.0);
        bad.n_aug = 6;
        assert!(bad.validate().is_err());
        bad.n_aug = 1;
        bad.substitute_proportion = 1.5;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn record_json_shapes() {
        let orig = OutputRecord {
            text: "a".into(),
            labels: None,
            augmented: false,
            method: None,
            per: None,
            source_index: None,
        };
        assert_eq!(serde_json::to_string(&orig).unwrap(), r#"{"text":"a"}"#);
        let aug = OutputRecord {
            text: "b".into(),
            labels: Some(vec!["x".into()]),
            augmented: true,
            method: Some(Method::Ngm),
            per: Some(0.25),
            source_index: Some(4),
        };
        assert_eq!(
            serde_json::to_string(&aug).unwrap(),
            r#"{"text":"b","labels":["x"],"augmented":true,"method":"ngm","per":0.25,"source_index":4}"#
        );
    }
}
