//! Corpus files and reference/hypothesis pairing.

mod synth;

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use log::warn;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use synth::{
    make_synthetic_benchmark, BenchmarkSizes, Grammar, IntentTemplate, SyntheticBenchmark,
    SyntheticChannel,
};

use crate::confusion::CleanNoisyPair;
use crate::error::{Error, Result};
use crate::text::NormalizationPolicy;

/// Parses one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], mut out: W) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io_at(path, e))?;
    read_jsonl(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

pub fn save_jsonl<T: Serialize>(items: &[T], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io_at(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_jsonl(items, &mut w)?;
    w.flush().map_err(|e| Error::io_at(path, e))
}

/// A transcription tagged with its utterance id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyedText {
    pub id: String,
    pub text: String,
}

impl KeyedText {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairStats {
    /// Ids present on both sides.
    pub total: usize,
    /// Joined pairs dropped because they agree after normalization.
    pub matched: usize,
    pub kept: usize,
    pub missing_hypothesis: usize,
    pub missing_reference: usize,
    pub duplicate_ids: usize,
}

/// Joins references and hypotheses by id and keeps the pairs that still
/// differ after normalization. Output follows reference order; texts are
/// kept raw.
pub fn collect_pairs(
    refs: &[KeyedText],
    hyps: &[KeyedText],
    policy: NormalizationPolicy,
) -> (Vec<CleanNoisyPair>, PairStats) {
    let mut stats = PairStats::default();
    let mut by_id: HashMap<&str, &str> = HashMap::with_capacity(hyps.len());
    for h in hyps {
        if by_id.insert(&h.id, &h.text).is_some() {
            stats.duplicate_ids += 1;
            warn!("duplicate hypothesis id {:?}; keeping the last", h.id);
        }
    }
    let mut seen = std::collections::HashSet::new();
    let mut pairs = Vec::new();
    for r in refs {
        if !seen.insert(r.id.as_str()) {
            stats.duplicate_ids += 1;
            warn!("duplicate reference id {:?}; keeping the first", r.id);
            continue;
        }
        let Some(hyp) = by_id.get(r.id.as_str()) else {
            stats.missing_hypothesis += 1;
            warn!("reference {:?} has no hypothesis", r.id);
            continue;
        };
        stats.total += 1;
        if policy.tokens(&r.text) == policy.tokens(hyp) {
            stats.matched += 1;
        } else {
            stats.kept += 1;
            pairs.push(CleanNoisyPair::new(r.text.clone(), *hyp));
        }
    }
    for h in hyps {
        if !seen.contains(h.id.as_str()) {
            stats.missing_reference += 1;
            warn!("hypothesis {:?} has no reference", h.id);
        }
    }
    (pairs, stats)
}
