use rand::Rng;

use crate::confusion::{Candidate, ConfusionTable};
use crate::text::tokenize;

/// Replaces n-grams of `text` with table candidates.
///
/// Tokens are scanned left to right. At each position, with probability
/// `proportion`, the longest n-gram starting there that has table entries is
/// replaced by a sampled candidate (a deletion candidate drops it) and the
/// scan resumes after the replaced span. Positions with no entry stay as
/// they are.
pub fn substitute_augment<R: Rng + ?Sized>(
    table: &ConfusionTable,
    text: &str,
    proportion: f64,
    rng: &mut R,
) -> String {
    let tokens = tokenize(text);
    let proportion = proportion.clamp(0.0, 1.0);
    let mut out: Vec<&str> = Vec::with_capacity(tokens.len());
    let max_order = table.max_order().max(1);
    let mut i = 0;
    while i < tokens.len() {
        if proportion > 0.0 && rng.random::<f64>() < proportion {
            let longest = max_order.min(tokens.len() - i);
            let hit = (1..=longest).rev().find_map(|n| {
                let source = tokens[i..i + n].join(" ");
                table.candidates(&source).map(|_| (n, source))
            });
            if let Some((n, source)) = hit {
                match table.sample(&source, rng) {
                    Some(Candidate::Tokens(rep)) => out.extend(rep.split(' ')),
                    Some(Candidate::Empty) | None => {}
                }
                i += n;
                continue;
            }
        }
        out.push(&tokens[i]);
        i += 1;
    }
    out.join(" ")
}
