//! Text normalization shared by corpus comparison, the noise generator and
//! the intent classifier.

use serde::{Deserialize, Serialize};

/// How two transcriptions are normalized before comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationPolicy {
    pub lowercase: bool,
    pub strip_punctuation: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_punctuation: true,
        }
    }
}

impl NormalizationPolicy {
    /// Splits `text` into normalized word tokens.
    ///
    /// With `strip_punctuation`, every character that is neither alphanumeric
    /// nor an apostrophe acts as a separator, and apostrophes are trimmed from
    /// token edges, so `what's` survives while `knot.Dot.` becomes two tokens.
    pub fn tokens(&self, text: &str) -> Vec<String> {
        let text = if self.lowercase {
            text.to_lowercase()
        } else {
            text.to_owned()
        };
        if !self.strip_punctuation {
            return text.split_whitespace().map(str::to_owned).collect();
        }
        text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
            .map(|t| t.trim_matches('\''))
            .filter(|t| !t.is_empty())
            .map(str::to_owned)
            .collect()
    }

    pub fn normalize(&self, text: &str) -> String {
        self.tokens(text).join(" ")
    }
}

/// Default-policy tokenization.
pub fn tokenize(text: &str) -> Vec<String> {
    NormalizationPolicy::default().tokens(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn punctuation_and_case_are_ignored() {
        let p = NormalizationPolicy::default();
        assert_eq!(p.tokens("Hello, world."), vec!["hello", "world"]);
        assert_eq!(p.normalize("Hello, world."), p.normalize("hello world"));
    }

    #[test]
    fn interior_apostrophes_survive() {
        assert_eq!(tokenize("What's 'that'?"), vec!["what's", "that"]);
    }

    #[test]
    fn interior_periods_split() {
        assert_eq!(tokenize("knot.Dot."), vec!["knot", "dot"]);
    }

    #[test]
    fn policy_can_keep_case_and_punctuation() {
        let p = NormalizationPolicy {
            lowercase: false,
            strip_punctuation: false,
        };
        assert_eq!(p.tokens("Hello, world."), vec!["Hello,", "world."]);
    }
}
