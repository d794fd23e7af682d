use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::text::tokenize;

/// Generic text edits of the EDA baseline. `Replace` and `Insert` draw
/// words from a corpus vocabulary rather than a synonym lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdaOp {
    Insert,
    Replace,
    Drop,
    Swap,
}

/// Number of edits applied to a sentence of `len` tokens: one per ten
/// tokens, at least one.
pub fn eda_intensity(len: usize) -> usize {
    ((len as f64 * 0.1).round() as usize).max(1)
}

/// Applies one edit of kind `op` to `tokens`.
pub fn eda_edit<R: Rng + ?Sized>(tokens: &mut Vec<String>, op: EdaOp, vocab: &[String], rng: &mut R) {
    match op {
        EdaOp::Insert => {
            if let Some(w) = vocab.choose(rng) {
                let at = rng.random_range(0..=tokens.len());
                tokens.insert(at, w.clone());
            }
        }
        EdaOp::Replace => {
            if let (Some(w), false) = (vocab.choose(rng), tokens.is_empty()) {
                let at = rng.random_range(0..tokens.len());
                tokens[at] = w.clone();
            }
        }
        EdaOp::Drop => {
            if tokens.len() >= 2 {
                let at = rng.random_range(0..tokens.len());
                tokens.remove(at);
            }
        }
        EdaOp::Swap => {
            if tokens.len() >= 2 {
                let at = rng.random_range(0..tokens.len() - 1);
                tokens.swap(at, at + 1);
            }
        }
    }
}

/// One randomly chosen EDA operation, repeated at the default intensity.
/// Single-token texts only get insertions or replacements.
pub fn eda_augment<R: Rng + ?Sized>(text: &str, vocab: &[String], rng: &mut R) -> String {
    let mut tokens = tokenize(text);
    if tokens.is_empty() {
        return String::new();
    }
    let ops: &[EdaOp] = if tokens.len() == 1 {
        &[EdaOp::Insert, EdaOp::Replace]
    } else {
        &[EdaOp::Insert, EdaOp::Replace, EdaOp::Drop, EdaOp::Swap]
    };
    let op = *ops.choose(rng).expect("non-empty op list");
    for _ in 0..eda_intensity(tokens.len()) {
        eda_edit(&mut tokens, op, vocab, rng);
    }
    tokens.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn drop_and_swap_on_two_tokens() {
        let mut rng = seeded(0);
        for _ in 0..20 {
            let mut t = toks("a b");
            eda_edit(&mut t, EdaOp::Drop, &[], &mut rng);
            assert!(t == toks("a") || t == toks("b"));
            let mut t = toks("a b");
            eda_edit(&mut t, EdaOp::Swap, &[], &mut rng);
            assert_eq!(t, toks("b a"));
        }
    }

    #[test]
    fn single_token_only_grows_or_changes() {
        let vocab = toks("x y z");
        let mut rng = seeded(1);
        for _ in 0..50 {
            let out = eda_augment("hello", &vocab, &mut rng);
            let n = out.split(' ').count();
            assert!(n == 1 || n == 2, "{out}");
        }
    }

    #[test]
    fn intensity() {
        assert_eq!(eda_intensity(1), 1);
        assert_eq!(eda_intensity(14), 1);
        assert_eq!(eda_intensity(15), 2);
        assert_eq!(eda_intensity(30), 3);
    }

    proptest! {
        #[test]
        fn single_edit_changes_length_by_at_most_one(
            words in prop::collection::vec("[a-e]{1,3}", 1..15),
            op in prop::sample::select(vec![EdaOp::Insert, EdaOp::Replace, EdaOp::Drop, EdaOp::Swap]),
            seed in any::<u64>(),
        ) {
            let vocab = toks("p q r");
            let mut tokens = words.clone();
            eda_edit(&mut tokens, op, &vocab, &mut seeded(seed));
            let delta = tokens.len() as i64 - words.len() as i64;
            prop_assert!(delta.abs() <= 1);
            match op {
                EdaOp::Insert => prop_assert_eq!(delta, 1),
                EdaOp::Drop if words.len() >= 2 => prop_assert_eq!(delta, -1),
                _ => prop_assert_eq!(delta, 0),
            }
        }
    }
}
