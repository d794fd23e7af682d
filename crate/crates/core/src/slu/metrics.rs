//! Example-based multi-label metrics.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Share of samples whose predicted set equals the gold set.
    pub exact_match: f64,
    /// Mean per-sample |Y ∩ Z| / |Y ∪ Z|. Equals exact match for single labels.
    pub accuracy: f64,
    /// Mean per-sample 2|Y ∩ Z| / (|Y| + |Z|).
    pub f1: f64,
}

impl Metrics {
    pub fn mean(runs: &[Metrics]) -> Metrics {
        if runs.is_empty() {
            return Metrics::default();
        }
        let n = runs.len() as f64;
        Metrics {
            exact_match: runs.iter().map(|m| m.exact_match).sum::<f64>() / n,
            accuracy: runs.iter().map(|m| m.accuracy).sum::<f64>() / n,
            f1: runs.iter().map(|m| m.f1).sum::<f64>() / n,
        }
    }
}

/// Jaccard overlap of one sample. Two empty sets count as a perfect match.
pub fn sample_accuracy(gold: &BTreeSet<&str>, predicted: &BTreeSet<&str>) -> f64 {
    let union = gold.union(predicted).count();
    if union == 0 {
        return 1.0;
    }
    gold.intersection(predicted).count() as f64 / union as f64
}

pub fn sample_f1(gold: &BTreeSet<&str>, predicted: &BTreeSet<&str>) -> f64 {
    let total = gold.len() + predicted.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * gold.intersection(predicted).count() as f64 / total as f64
}

/// Averages the per-sample scores over `(gold, predicted)` label lists.
pub fn score<'a, I>(samples: I) -> Metrics
where
    I: IntoIterator<Item = (&'a [String], &'a [String])>,
{
    let mut sum = Metrics::default();
    let mut n = 0usize;
    for (gold, predicted) in samples {
        let y: BTreeSet<&str> = gold.iter().map(String::as_str).collect();
        let z: BTreeSet<&str> = predicted.iter().map(String::as_str).collect();
        sum.exact_match += f64::from(u8::from(y == z));
        sum.accuracy += sample_accuracy(&y, &z);
        sum.f1 += sample_f1(&y, &z);
        n += 1;
    }
    if n == 0 {
        return sum;
    }
    let n = n as f64;
    Metrics {
        exact_match: sum.exact_match / n,
        accuracy: sum.accuracy / n,
        f1: sum.f1 / n,
    }
}
