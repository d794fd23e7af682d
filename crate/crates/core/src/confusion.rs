//! Substitution candidate tables.
//!
//! Two sources feed the same table type: confusion events counted from
//! aligned clean/noisy pairs (statistical substitution), and phonetic near
//! neighbours weighted by term frequency (rule-based substitution).
//! Candidates for a source n-gram are drawn with probability proportional to
//! their weight.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alignment::{align, levenshtein_distance, EditOp};
use crate::error::{Error, Result};
use crate::lexicon::PronouncingDict;
use crate::text::NormalizationPolicy;

/// TSV spelling of the deletion candidate.
pub const EMPTY_MARKER: &str = "<EMPTY>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Phonetic neighbours weighted by term frequency.
    Rule,
    /// Confusion counts from aligned pairs.
    Statistic,
}

/// A replacement for a source n-gram. `Empty` deletes the n-gram.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Candidate {
    Tokens(String),
    Empty,
}

impl Candidate {
    pub fn as_str(&self) -> &str {
        match self {
            Candidate::Tokens(s) => s,
            Candidate::Empty => "",
        }
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Candidate::Tokens(s) => f.write_str(s),
            Candidate::Empty => f.write_str(EMPTY_MARKER),
        }
    }
}

/// A clean transcription and the ASR hypothesis for the same utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanNoisyPair {
    pub clean: String,
    pub noisy: String,
}

impl CleanNoisyPair {
    pub fn new(clean: impl Into<String>, noisy: impl Into<String>) -> Self {
        Self {
            clean: clean.into(),
            noisy: noisy.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionTable {
    provenance: Provenance,
    /// Source n-gram (space-joined tokens) to weighted candidates.
    entries: BTreeMap<String, Vec<(Candidate, f64)>>,
    max_order: usize,
}

impl ConfusionTable {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            provenance,
            entries: BTreeMap::new(),
            max_order: 0,
        }
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Longest source n-gram in the table, in tokens.
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn candidates(&self, source: &str) -> Option<&[(Candidate, f64)]> {
        self.entries.get(source).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[(Candidate, f64)])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn total_weight(&self) -> f64 {
        self.entries
            .values()
            .flat_map(|c| c.iter().map(|(_, w)| *w))
            .sum()
    }

    /// Adds `weight` to the (source, candidate) cell. Non-positive weights,
    /// self-replacements and rule-table deletions are rejected.
    pub fn add(&mut self, source: &str, candidate: Candidate, weight: f64) -> Result<()> {
        if source.trim().is_empty() {
            return Err(Error::InvalidData("empty source n-gram".into()));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidData(format!(
                "weight for {source:?} must be positive, got {weight}"
            )));
        }
        if candidate.as_str() == source {
            return Err(Error::InvalidData(format!(
                "candidate equals its source {source:?}"
            )));
        }
        if candidate == Candidate::Empty && self.provenance == Provenance::Rule {
            return Err(Error::InvalidData(
                "deletion candidates only belong in statistical tables".into(),
            ));
        }
        let list = self.entries.entry(source.to_owned()).or_default();
        match list.iter_mut().find(|(c, _)| *c == candidate) {
            Some((_, w)) => *w += weight,
            None => list.push((candidate, weight)),
        }
        self.max_order = self.max_order.max(source.split(' ').count());
        Ok(())
    }

    /// Drops candidates below `min_weight` and any source left empty.
    pub fn retain_min_weight(&mut self, min_weight: f64) {
        for list in self.entries.values_mut() {
            list.retain(|(_, w)| *w >= min_weight);
        }
        self.entries.retain(|_, l| !l.is_empty());
        self.max_order = self
            .entries
            .keys()
            .map(|k| k.split(' ').count())
            .max()
            .unwrap_or(0);
    }

    /// Probability of each candidate of `source` under weight-proportional
    /// sampling.
    pub fn distribution(&self, source: &str) -> Option<Vec<(&Candidate, f64)>> {
        let list = self.entries.get(source)?;
        let total: f64 = list.iter().map(|(_, w)| w).sum();
        Some(list.iter().map(|(c, w)| (c, w / total)).collect())
    }

    /// Draws a replacement for `source`; `None` when the table has no entry.
    pub fn sample<R: Rng + ?Sized>(&self, source: &str, rng: &mut R) -> Option<&Candidate> {
        let list = self.entries.get(source)?;
        let total: f64 = list.iter().map(|(_, w)| w).sum();
        let mut target = rng.random::<f64>() * total;
        for (candidate, weight) in list {
            if target < *weight {
                return Some(candidate);
            }
            target -= weight;
        }
        // Rounding can leave `target` a hair above the last bucket.
        list.last().map(|(c, _)| c)
    }

    /// Writes `source<TAB>candidate<TAB>weight` lines in a stable order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (source, list) in &self.entries {
            for (candidate, weight) in list {
                writeln!(out, "{source}\t{candidate}\t{weight}")?;
            }
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("table is valid UTF-8")
    }

    /// Reads a TSV table. Provenance is inferred: any `<EMPTY>` candidate
    /// marks a statistical table, otherwise `default` applies.
    pub fn read_tsv<R: BufRead>(reader: R, default: Provenance) -> Result<Self> {
        let mut rows = Vec::new();
        let mut saw_empty = false;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(source), Some(candidate), Some(weight), None) =
                (cols.next(), cols.next(), cols.next(), cols.next())
            else {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "expected source<TAB>candidate<TAB>weight".into(),
                });
            };
            let weight: f64 = weight.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("bad weight {weight:?}"),
            })?;
            let candidate = if candidate == EMPTY_MARKER {
                saw_empty = true;
                Candidate::Empty
            } else {
                Candidate::Tokens(candidate.to_owned())
            };
            rows.push((idx + 1, source.to_owned(), candidate, weight));
        }
        let provenance = if saw_empty {
            Provenance::Statistic
        } else {
            default
        };
        let mut table = ConfusionTable::new(provenance);
        for (line, source, candidate, weight) in rows {
            table
                .add(&source, candidate, weight)
                .map_err(|e| Error::Parse {
                    line,
                    message: e.to_string(),
                })?;
        }
        Ok(table)
    }

    pub fn load_tsv(path: impl AsRef<Path>, default: Provenance) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io_at(path, e))?;
        Self::read_tsv(std::io::BufReader::new(file), default)
    }
}

/// A reference run aligned to a hypothesis run, split out of an alignment
/// path where consecutive non-match operations meet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionEvent {
    pub reference: Vec<String>,
    pub hypothesis: Vec<String>,
}

/// Splits an alignment into maximal runs of consecutive non-match ops.
pub fn confusion_events(ops: &[EditOp<String>]) -> Vec<ConfusionEvent> {
    let mut events = Vec::new();
    let mut current: Option<ConfusionEvent> = None;
    for op in ops {
        if op.is_match() {
            events.extend(current.take());
            continue;
        }
        let ev = current.get_or_insert_with(|| ConfusionEvent {
            reference: Vec::new(),
            hypothesis: Vec::new(),
        });
        ev.reference.extend(op.ref_token().cloned());
        ev.hypothesis.extend(op.hyp_token().cloned());
    }
    events.extend(current);
    events
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsOptions {
    pub max_ngram: usize,
    pub min_count: f64,
    pub policy: NormalizationPolicy,
}

impl Default for SsOptions {
    fn default() -> Self {
        Self {
            max_ngram: 3,
            min_count: 1.0,
            policy: NormalizationPolicy::default(),
        }
    }
}

/// Counts confusion events over word-aligned pairs.
///
/// Pure insertions have no source n-gram and are not counted; neither are
/// events whose reference side is longer than `max_ngram`.
pub fn extract_ss_table(pairs: &[CleanNoisyPair], opts: &SsOptions) -> Result<ConfusionTable> {
    if opts.max_ngram == 0 {
        return Err(Error::InvalidConfig("max_ngram must be at least 1".into()));
    }
    let mut table = ConfusionTable::new(Provenance::Statistic);
    for pair in pairs {
        let clean = opts.policy.tokens(&pair.clean);
        let noisy = opts.policy.tokens(&pair.noisy);
        let path = align(&clean, &noisy);
        for ev in confusion_events(&path.ops) {
            if ev.reference.is_empty() || ev.reference.len() > opts.max_ngram {
                continue;
            }
            let source = ev.reference.join(" ");
            let candidate = if ev.hypothesis.is_empty() {
                Candidate::Empty
            } else {
                Candidate::Tokens(ev.hypothesis.join(" "))
            };
            if candidate.as_str() == source {
                continue;
            }
            table.add(&source, candidate, 1.0)?;
        }
    }
    if opts.min_count > 1.0 {
        table.retain_min_weight(opts.min_count);
    }
    Ok(table)
}

/// Phonetic neighbours: for every vocabulary word, the other vocabulary words
/// whose first pronunciations are fewer than `max_phone_edit` phone edits
/// away, weighted by their term frequency. Words missing from the dictionary
/// or with non-positive frequency are skipped.
pub fn build_rs_table(
    dict: &PronouncingDict,
    vocab: &[(String, f64)],
    max_phone_edit: usize,
) -> Result<ConfusionTable> {
    if max_phone_edit == 0 {
        return Err(Error::InvalidConfig("max_phone_edit must be at least 1".into()));
    }
    let mut words: Vec<(String, &[String], f64)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (word, tf) in vocab {
        let word = word.to_lowercase();
        if *tf <= 0.0 || !seen.insert(word.clone()) {
            continue;
        }
        if let Some(phones) = dict.lookup(&word) {
            words.push((word, phones, *tf));
        }
    }
    // Length difference bounds the distance from below, so only words in
    // nearby length buckets need comparing.
    words.sort_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| a.0.cmp(&b.0)));

    let mut table = ConfusionTable::new(Provenance::Rule);
    for (i, (word, phones, _)) in words.iter().enumerate() {
        for (j, (other, other_phones, tf)) in words.iter().enumerate() {
            if i == j {
                continue;
            }
            if phones.len().abs_diff(other_phones.len()) >= max_phone_edit {
                continue;
            }
            if levenshtein_distance(phones, other_phones) < max_phone_edit {
                table.add(word, Candidate::Tokens(other.clone()), *tf)?;
            }
        }
    }
    Ok(table)
}
