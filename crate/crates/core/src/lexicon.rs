//! Pronouncing dictionary and the text-to-phones transform used by the phone
//! edit rate.
//!
//! The dictionary reads the line format of the CMU Pronouncing Dictionary:
//! `WORD  PH1 PH2 ...`, alternates as `WORD(2)`, and `;;;` comment lines. Both
//! the classic upper-case two-space layout and the lower-case single-space
//! layout of newer releases are accepted.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Phone emitted for a token that has no dictionary entry.
pub const UNK_PHONE: &str = "UNK";

const BUNDLED_DICT: &str = include_str!("../data/cmudict-subset.dict");
const BUNDLED_TERM_FREQ: &str = include_str!("../data/term-freq.tsv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: usize,
    pub content: String,
    pub reason: &'static str,
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {} ({:?})", self.line, self.reason, self.content)
    }
}

/// Word to pronunciations map. Keys are stored lower-case.
#[derive(Debug, Clone, Default)]
pub struct PronouncingDict {
    entries: HashMap<String, Vec<Vec<String>>>,
}

impl PronouncingDict {
    /// Parses a dictionary stream, returning the dictionary together with
    /// warnings for lines that were skipped.
    pub fn parse<R: BufRead>(reader: R) -> Result<(Self, Vec<ParseWarning>)> {
        let mut dict = PronouncingDict::default();
        let mut warnings = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with(";;;") {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let Some(head) = fields.next() else { continue };
            let phones: Vec<String> = fields
                .take_while(|f| !f.starts_with('#'))
                .map(str::to_owned)
                .collect();
            if phones.is_empty() {
                warnings.push(ParseWarning {
                    line: line_no,
                    content: line.clone(),
                    reason: "no phones after word",
                });
                continue;
            }
            let (word, alternate) = split_variant(head);
            let key = word.to_lowercase();
            match dict.entries.get_mut(&key) {
                Some(prons) if alternate => prons.push(phones),
                // Repeated primary entry: the first occurrence wins.
                Some(_) => warnings.push(ParseWarning {
                    line: line_no,
                    content: line.clone(),
                    reason: "duplicate primary entry",
                }),
                None => {
                    dict.entries.insert(key, vec![phones]);
                }
            }
        }
        Ok((dict, warnings))
    }

    pub fn parse_str(source: &str) -> (Self, Vec<ParseWarning>) {
        Self::parse(source.as_bytes()).expect("reading from memory cannot fail")
    }

    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<ParseWarning>)> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io_at(path, e))?;
        Self::parse(std::io::BufReader::new(file))
    }

    /// The dictionary subset shipped with the crate. It covers the words of
    /// the synthetic benchmark, the test fixtures and their phonetic
    /// neighbours.
    pub fn bundled() -> Self {
        Self::parse_str(BUNDLED_DICT).0
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All listed pronunciations of `word`, case-insensitively.
    pub fn pronunciations(&self, word: &str) -> Option<&[Vec<String>]> {
        self.entries
            .get(&word.to_lowercase())
            .map(Vec::as_slice)
    }

    /// First listed pronunciation of `word`.
    pub fn lookup(&self, word: &str) -> Option<&[String]> {
        self.pronunciations(word)
            .and_then(|p| p.first())
            .map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(&word.to_lowercase())
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Maps text to its phone sequence: every token contributes its first
    /// pronunciation, or a single `UNK` phone when it is missing from the
    /// dictionary.
    pub fn phones(&self, text: &str) -> PhonemeSequence {
        let mut out = Vec::new();
        for token in phone_tokens(text) {
            match self.entries.get(&token) {
                Some(prons) => out.extend(prons[0].iter().cloned()),
                None => out.push(UNK_PHONE.to_owned()),
            }
        }
        PhonemeSequence(out)
    }
}

fn split_variant(head: &str) -> (&str, bool) {
    if let Some(open) = head.rfind('(') {
        let inner = &head[open + 1..];
        if let Some(num) = inner.strip_suffix(')') {
            if !num.is_empty() && num.bytes().all(|b| b.is_ascii_digit()) && open > 0 {
                return (&head[..open], true);
            }
        }
    }
    (head, false)
}

/// Tokenization for the phone transform: lower-case, split on whitespace,
/// strip punctuation from token edges only. Interior punctuation is kept, so
/// a run-on token such as `knot.dot` stays one (usually unknown) word.
pub fn phone_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
}

/// Ordered phone symbols for a piece of text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhonemeSequence(pub Vec<String>);

impl PhonemeSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn unk_count(&self) -> usize {
        self.0.iter().filter(|p| *p == UNK_PHONE).count()
    }
}

impl fmt::Display for PhonemeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

/// Term frequencies for the bundled dictionary words, from a large general
/// English frequency list.
pub fn bundled_term_frequencies() -> Vec<(String, f64)> {
    parse_term_frequencies(BUNDLED_TERM_FREQ).expect("bundled term frequencies are well formed")
}

/// Reads `word<TAB>count` lines.
pub fn parse_term_frequencies(source: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, count) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: "expected word<TAB>count".into(),
        })?;
        let count: f64 = count.trim().parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("bad count {count:?}"),
        })?;
        out.push((word.to_owned(), count));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn single_entry() {
        let (d, w) = PronouncingDict::parse_str("KNOT  N AA1 T\n");
        assert!(w.is_empty());
        assert_eq!(d.lookup("knot").unwrap(), seq("N AA1 T").as_slice());
        assert_eq!(d.lookup("KNOT").unwrap(), seq("N AA1 T").as_slice());
    }

    #[test]
    fn empty_stream_is_empty_dict() {
        let (d, w) = PronouncingDict::parse_str("");
        assert!(d.is_empty());
        assert!(w.is_empty());
    }

    #[test]
    fn alternates_keep_listed_order() {
        let (d, _) = PronouncingDict::parse_str("READ R EH1 D\nREAD(2) R IY1 D\n");
        let prons = d.pronunciations("read").unwrap();
        assert_eq!(prons.len(), 2);
        assert_eq!(prons[0], seq("R EH1 D"));
        assert_eq!(prons[1], seq("R IY1 D"));
        assert_eq!(d.phones("read").0, seq("R EH1 D"));
    }

    #[test]
    fn comments_malformed_and_duplicates() {
        let src = ";;; header\nDOG  D AO1 G\nBROKEN\nDOG  D AA1 G\n";
        let (d, w) = PronouncingDict::parse_str(src);
        assert_eq!(d.len(), 1);
        assert_eq!(d.lookup("dog").unwrap(), seq("D AO1 G").as_slice());
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].line, 3);
        assert_eq!(w[1].reason, "duplicate primary entry");
    }

    #[test]
    fn lowercase_layout_with_inline_comment() {
        let (d, _) = PronouncingDict::parse_str("d'artagnan D AH0 R T AE1 NG Y AH0 N # foreign\n");
        assert_eq!(d.lookup("D'Artagnan").unwrap().len(), 9);
    }

    #[test]
    fn word_with_parenthesis_but_no_variant() {
        assert_eq!(split_variant("(PAREN"), ("(PAREN", false));
        assert_eq!(split_variant("WORD(x)"), ("WORD(x)", false));
        assert_eq!(split_variant("WORD(12)"), ("WORD", true));
    }

    #[test]
    fn phone_transform_matches_table_examples() {
        let d = PronouncingDict::bundled();
        assert_eq!(
            d.phones("The priest tied the knot.").to_string(),
            "DH AH0 P R IY1 S T T AY1 D DH AH0 N AA1 T"
        );
        assert_eq!(
            d.phones("The priest tied the knot.Dot.").to_string(),
            "DH AH0 P R IY1 S T T AY1 D DH AH0 UNK"
        );
        assert!(d.phones("").is_empty());
    }

    #[test]
    fn numerals_are_unknown() {
        let d = PronouncingDict::bundled();
        assert_eq!(d.phones("42 !").0, seq("UNK"));
    }

    #[test]
    fn bundled_frequencies_cover_bundled_words() {
        let d = PronouncingDict::bundled();
        let tf = bundled_term_frequencies();
        assert_eq!(tf.len(), d.len());
        assert!(tf.iter().all(|(w, c)| d.contains(w) && *c >= 1.0));
    }
}
