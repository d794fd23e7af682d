//! Unit-cost Levenshtein distance and alignment over generic token sequences.
//!
//! The same code path serves word-level alignment of clean/noisy pairs and
//! phone-level distance for the phone edit rate.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditKind {
    Match,
    Substitute,
    Insert,
    Delete,
}

/// One step of an alignment path. `Insert` consumes a hypothesis token only,
/// `Delete` a reference token only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum EditOp<T> {
    Match(T),
    Substitute { reference: T, hypothesis: T },
    Insert(T),
    Delete(T),
}

impl<T> EditOp<T> {
    pub fn kind(&self) -> EditKind {
        match self {
            EditOp::Match(_) => EditKind::Match,
            EditOp::Substitute { .. } => EditKind::Substitute,
            EditOp::Insert(_) => EditKind::Insert,
            EditOp::Delete(_) => EditKind::Delete,
        }
    }

    pub fn ref_token(&self) -> Option<&T> {
        match self {
            EditOp::Match(t) | EditOp::Delete(t) => Some(t),
            EditOp::Substitute { reference, .. } => Some(reference),
            EditOp::Insert(_) => None,
        }
    }

    pub fn hyp_token(&self) -> Option<&T> {
        match self {
            EditOp::Match(t) | EditOp::Insert(t) => Some(t),
            EditOp::Substitute { hypothesis, .. } => Some(hypothesis),
            EditOp::Delete(_) => None,
        }
    }

    pub fn is_match(&self) -> bool {
        matches!(self, EditOp::Match(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedPair<T> {
    pub reference: Vec<T>,
    pub hypothesis: Vec<T>,
    pub ops: Vec<EditOp<T>>,
    pub distance: usize,
}

impl<T: Clone> AlignedPair<T> {
    /// Reference tokens read back off the path.
    pub fn replay_reference(&self) -> Vec<T> {
        self.ops.iter().filter_map(|op| op.ref_token().cloned()).collect()
    }

    /// Applies the path to the reference, yielding the hypothesis.
    pub fn replay_hypothesis(&self) -> Vec<T> {
        self.ops.iter().filter_map(|op| op.hyp_token().cloned()).collect()
    }
}

/// Minimal unit-cost edit distance, in O(min(|a|,|b|)) memory.
pub fn levenshtein_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut curr = vec![0usize; short.len() + 1];
    for (i, x) in long.iter().enumerate() {
        curr[0] = i + 1;
        for (j, y) in short.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[short.len()]
}

/// One optimal alignment of `reference` against `hypothesis`.
///
/// Among equal-cost paths the backtrace prefers, at every cell, match over
/// substitution over deletion over insertion.
pub fn align<T: PartialEq + Clone>(reference: &[T], hypothesis: &[T]) -> AlignedPair<T> {
    let m = reference.len();
    let n = hypothesis.len();
    let width = n + 1;
    let mut table = vec![0usize; (m + 1) * width];
    for (j, cell) in table.iter_mut().take(width).enumerate() {
        *cell = j;
    }
    for i in 1..=m {
        table[i * width] = i;
        for j in 1..=n {
            let cost = usize::from(reference[i - 1] != hypothesis[j - 1]);
            let diag = table[(i - 1) * width + j - 1] + cost;
            let up = table[(i - 1) * width + j] + 1;
            let left = table[i * width + j - 1] + 1;
            table[i * width + j] = diag.min(up).min(left);
        }
    }

    let at = |i: usize, j: usize| table[i * width + j];
    let mut ops = Vec::with_capacity(m.max(n));
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        let here = at(i, j);
        if i > 0 && j > 0 {
            let same = reference[i - 1] == hypothesis[j - 1];
            if same && at(i - 1, j - 1) == here {
                ops.push(EditOp::Match(reference[i - 1].clone()));
                i -= 1;
                j -= 1;
                continue;
            }
            if !same && at(i - 1, j - 1) + 1 == here {
                ops.push(EditOp::Substitute {
                    reference: reference[i - 1].clone(),
                    hypothesis: hypothesis[j - 1].clone(),
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && at(i - 1, j) + 1 == here {
            ops.push(EditOp::Delete(reference[i - 1].clone()));
            i -= 1;
        } else {
            ops.push(EditOp::Insert(hypothesis[j - 1].clone()));
            j -= 1;
        }
    }
    ops.reverse();

    AlignedPair {
        reference: reference.to_vec(),
        hypothesis: hypothesis.to_vec(),
        distance: at(m, n),
        ops,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    /// Exhaustive recursion over all edit scripts; only usable on tiny inputs.
    fn brute_force(a: &[u8], b: &[u8]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                let sub = brute_force(ra, rb) + usize::from(x != y);
                let del = brute_force(ra, b) + 1;
                let ins = brute_force(a, rb) + 1;
                sub.min(del).min(ins)
            }
        }
    }

    #[test]
    fn three_by_three_example() {
        assert_eq!(levenshtein_distance(&toks("A B C"), &toks("B C D")), 2);
    }

    #[test]
    fn single_substitution() {
        let p = align(&toks("good"), &toks("could"));
        assert_eq!(p.distance, 1);
        assert_eq!(
            p.ops,
            vec![EditOp::Substitute {
                reference: "good".to_owned(),
                hypothesis: "could".to_owned()
            }]
        );
    }

    #[test]
    fn full_deletion() {
        let p = align(&toks("what is"), &[]);
        assert_eq!(p.distance, 2);
        assert!(p.ops.iter().all(|op| op.kind() == EditKind::Delete));
        assert_eq!(p.ops.len(), 2);
    }

    #[test]
    fn single_insertion() {
        let p = align(&toks("a b c"), &toks("a x b c"));
        let kinds: Vec<_> = p.ops.iter().map(EditOp::kind).collect();
        assert_eq!(
            kinds,
            vec![EditKind::Match, EditKind::Insert, EditKind::Match, EditKind::Match]
        );
        assert_eq!(p.ops[1], EditOp::Insert("x".to_owned()));
        assert_eq!(p.distance, 1);
    }

    #[test]
    fn empty_inputs() {
        let p = align::<String>(&[], &[]);
        assert_eq!(p.distance, 0);
        assert!(p.ops.is_empty());
    }

    proptest! {
        #[test]
        fn distance_matches_brute_force(
            a in prop::collection::vec(0u8..3, 0..6),
            b in prop::collection::vec(0u8..3, 0..6),
        ) {
            prop_assert_eq!(levenshtein_distance(&a, &b), brute_force(&a, &b));
        }

        #[test]
        fn alignment_is_consistent(
            a in prop::collection::vec(0u8..5, 0..12),
            b in prop::collection::vec(0u8..5, 0..12),
        ) {
            let p = align(&a, &b);
            prop_assert_eq!(p.distance, levenshtein_distance(&a, &b));
            prop_assert_eq!(p.distance, p.ops.iter().filter(|o| !o.is_match()).count());
            prop_assert_eq!(p.replay_reference(), a.clone());
            prop_assert_eq!(p.replay_hypothesis(), b.clone());
            prop_assert_eq!(levenshtein_distance(&a, &b), levenshtein_distance(&b, &a));
            prop_assert_eq!(p.distance == 0, a == b);
        }

        #[test]
        fn triangle_inequality(
            a in prop::collection::vec(0u8..4, 0..10),
            b in prop::collection::vec(0u8..4, 0..10),
            c in prop::collection::vec(0u8..4, 0..10),
        ) {
            let ab = levenshtein_distance(&a, &b);
            let bc = levenshtein_distance(&b, &c);
            prop_assert!(levenshtein_distance(&a, &c) <= ab + bc);
        }
    }
}
