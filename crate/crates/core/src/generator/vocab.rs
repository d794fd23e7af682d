use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const SEP: &str = "[SEP]";
pub const EOS: &str = "[EOS]";

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const SEP_ID: usize = 2;
pub const EOS_ID: usize = 3;

const RESERVED: [&str; 4] = [PAD, UNK, SEP, EOS];

/// Word-level vocabulary with the four reserved tokens at ids 0..3.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds a vocabulary from tokenized texts, keeping at most `max_size`
    /// surface tokens that occur at least `min_count` times. Ties in frequency
    /// are broken alphabetically.
    pub fn build<'a, I, S>(texts: I, max_size: usize, min_count: usize) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for text in texts {
            for tok in text {
                *counts.entry(tok.as_ref()).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|(t, c)| *c >= min_count && !RESERVED.contains(t))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_size);
        Self::from_surface(ranked.into_iter().map(|(t, _)| t.to_owned()))
    }

    pub fn from_surface(surface: impl IntoIterator<Item = String>) -> Self {
        let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        for t in surface {
            if !RESERVED.contains(&t.as_str()) && !tokens.contains(&t) {
                tokens.push(t);
            }
        }
        tokens.into()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> &str {
        self.tokens.get(id).map(String::as_str).unwrap_or(UNK)
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    /// Joins surface tokens with spaces, dropping padding and structural
    /// markers.
    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter()
            .filter(|&&id| id != PAD_ID && id != SEP_ID && id != EOS_ID)
            .map(|&id| self.token(id))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { tokens, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_ids_are_fixed() {
        let v = Vocab::from_surface(["b".to_string(), "a".to_string()]);
        assert_eq!(v.id(PAD), 0);
        assert_eq!(v.id(UNK), 1);
        assert_eq!(v.id(SEP), 2);
        assert_eq!(v.id(EOS), 3);
        assert_eq!(v.id("b"), 4);
        assert_eq!(v.id("zzz"), UNK_ID);
    }

    #[test]
    fn frequency_capped_build() {
        let texts: Vec<Vec<&str>> = vec![vec!["a", "b", "a"], vec!["c", "a", "b"]];
        let v = Vocab::build(texts.iter().map(|t| t.as_slice()), 2, 1);
        assert_eq!(v.len(), 6);
        assert_eq!(v.token(4), "a");
        assert_eq!(v.token(5), "b");
        assert_eq!(v.id("c"), UNK_ID);
    }

    #[test]
    fn decode_skips_markers() {
        let v = Vocab::from_surface(["x".to_string()]);
        assert_eq!(v.decode(&[4, SEP_ID, 4, UNK_ID, EOS_ID]), "x x [UNK]");
    }

    #[test]
    fn serde_as_token_list() {
        let v = Vocab::from_surface(["x".to_string()]);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"["[PAD]","[UNK]","[SEP]","[EOS]","x"]"#);
        let back: Vocab = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }
}
