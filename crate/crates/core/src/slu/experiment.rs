//! Multi-seed comparison of training conditions on one test set.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train_classifier, ClassifierConfig, LabeledExample, LossMode, Metrics};
use crate::error::Result;
use crate::rng::derive_seed;

/// A named training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: String,
    pub train: Vec<LabeledExample>,
    /// Marks a report entry whose noise is emulated rather than observed.
    pub note: Option<String>,
}

impl Condition {
    pub fn new(name: impl Into<String>, train: Vec<LabeledExample>) -> Self {
        Self {
            name: name.into(),
            train,
            note: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub condition: String,
    pub train_size: usize,
    pub runs: Vec<Metrics>,
    pub mean: Metrics,
    /// Sample standard deviation of `accuracy` across runs.
    pub accuracy_std: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub mode: LossMode,
    pub repeats: usize,
    pub test_size: usize,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn row(&self, condition: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.condition == condition)
    }

    /// Mean accuracy of `condition` in percentage points.
    pub fn accuracy(&self, condition: &str) -> Option<f64> {
        self.row(condition).map(|r| 100.0 * r.mean.accuracy)
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}

/// Trains `repeats` classifiers on `condition` and scores each on `test`.
/// Repeat `r` uses the same seed in every condition.
pub fn run_condition(
    condition: &Condition,
    test: &[LabeledExample],
    cfg: &ClassifierConfig,
    repeats: usize,
    seed: u64,
) -> Result<ComparisonRow> {
    let runs = (0..repeats)
        .map(|r| {
            let (model, _) = train_classifier(&condition.train, cfg, derive_seed(seed, &format!("run{r}")))?;
            model.evaluate(test)
        })
        .collect::<Result<Vec<_>>>()?;
    let acc: Vec<f64> = runs.iter().map(|m| m.accuracy).collect();
    Ok(ComparisonRow {
        condition: condition.name.clone(),
        train_size: condition.train.len(),
        mean: Metrics::mean(&runs),
        accuracy_std: std_dev(&acc),
        runs,
        note: condition.note.clone(),
    })
}

/// Runs every condition against `test`, conditions in parallel when
/// `jobs > 1`. The result does not depend on `jobs`.
pub fn robustness_experiment(
    conditions: &[Condition],
    test: &[LabeledExample],
    cfg: &ClassifierConfig,
    repeats: usize,
    seed: u64,
    jobs: usize,
) -> Result<ComparisonTable> {
    let run = |c: &Condition| run_condition(c, test, cfg, repeats, seed);
    let rows: Result<Vec<ComparisonRow>> = if jobs > 1 {
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| conditions.par_iter().map(run).collect()),
            Err(_) => conditions.iter().map(run).collect(),
        }
    } else {
        conditions.iter().map(run).collect()
    };
    Ok(ComparisonTable {
        mode: cfg.mode,
        repeats,
        test_size: test.len(),
        rows: rows?,
    })
}

/// Plain-text table, one condition per line, scores in percent.
pub fn format_table(table: &ComparisonTable) -> String {
    let width = table.rows.iter().map(|r| r.condition.len()).max().unwrap_or(0).max(9);
    let mut out = String::new();
    let multi = table.mode == LossMode::OneVsAll;
    if multi {
        let _ = writeln!(out, "{:<width$}  {:>8}  {:>6}  {:>6}  {:>7}", "condition", "train", "acc", "f1", "std");
    } else {
        let _ = writeln!(out, "{:<width$}  {:>8}  {:>6}  {:>7}", "condition", "train", "acc", "std");
    }
    for r in &table.rows {
        let note = r.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default();
        if multi {
            let _ = writeln!(
                out,
                "{:<width$}  {:>8}  {:>6.2}  {:>6.2}  {:>7.2}{note}",
                r.condition,
                r.train_size,
                100.0 * r.mean.accuracy,
                100.0 * r.mean.f1,
                100.0 * r.accuracy_std
            );
        } else {
            let _ = writeln!(
                out,
                "{:<width$}  {:>8}  {:>6.2}  {:>7.2}{note}",
                r.condition,
                r.train_size,
                100.0 * r.mean.accuracy,
                100.0 * r.accuracy_std
            );
        }
    }
    let _ = writeln!(out, "mean of {} runs on {} test examples", table.repeats, table.test_size);
    out
}
