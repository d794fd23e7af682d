//! The end-to-end robustness comparison on the synthetic command benchmark:
//! build noise resources from the pair corpus, augment the clean training
//! split with each method, and score intent classifiers on the noisy test.

use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::augment::{
    generate_candidates, select_from_pools, AugmentConfig, AugmentStats, InputRecord, Method,
    OutputRecord, Resources,
};
use crate::confusion::{build_rs_table, extract_ss_table, ConfusionTable, SsOptions};
use crate::corpus::{make_synthetic_benchmark, BenchmarkSizes, Grammar, PairStats, SyntheticChannel};
use crate::error::Result;
use crate::generator::{GenerationConfig, NgmConfig, NoiseGenerator, TrainConfig, TrainReport};
use crate::lexicon::{bundled_term_frequencies, PronouncingDict};
use crate::rng::{derive_seed, seeded};
use crate::slu::{robustness_experiment, ClassifierConfig, ComparisonTable, Condition, LabeledExample};

pub const CLEAN: &str = "clean";
pub const EDA: &str = "+EDA";
pub const RS: &str = "+RS";
pub const SS: &str = "+SS";
pub const NGM: &str = "+NGM";
pub const NGM_UNFILTERED: &str = "+NGM (no filter)";
pub const NOISY: &str = "+noisy";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub seed: u64,
    pub jobs: usize,
    pub sizes: BenchmarkSizes,
    pub repeats: usize,
    pub classifier: ClassifierConfig,
    pub ngm_shape: NgmConfig,
    pub ngm_train: TrainConfig,
    pub ngm_max_vocab: usize,
    pub generation: GenerationConfig,
    pub n_candidates: usize,
    pub n_aug: usize,
    pub substitute_proportion: f64,
    pub per_threshold: f64,
    pub rs_max_phone_edit: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            jobs: 1,
            sizes: BenchmarkSizes::default(),
            repeats: 5,
            classifier: ClassifierConfig::default(),
            ngm_shape: NgmConfig {
                n_layers: 2,
                d_model: 48,
                n_heads: 4,
                d_ff: 96,
                context_window: 48,
                vocab_size: 0,
            },
            ngm_train: TrainConfig {
                steps: 3000,
                batch_size: 16,
                ..TrainConfig::default()
            },
            ngm_max_vocab: 2000,
            generation: GenerationConfig::default(),
            n_candidates: 5,
            n_aug: 4,
            substitute_proportion: 0.1,
            per_threshold: 1.0,
            rs_max_phone_edit: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub condition: String,
    pub stats: AugmentStats,
    /// Mean phone edit rate of the selected samples.
    pub mean_per: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub pair_stats: PairStats,
    pub ss_entries: usize,
    pub rs_entries: usize,
    pub ngm: TrainReport,
    pub augmentation: Vec<MethodSummary>,
    /// Accuracy of the clean-trained model on the clean test split.
    pub clean_test_accuracy: f64,
    pub table: ComparisonTable,
}

fn to_inputs(examples: &[LabeledExample]) -> Vec<InputRecord> {
    examples
        .iter()
        .map(|e| InputRecord::labeled(e.text.clone(), e.labels.clone()))
        .collect()
}

fn to_examples(records: &[OutputRecord]) -> Vec<LabeledExample> {
    records
        .iter()
        .map(|r| LabeledExample {
            text: r.text.clone(),
            labels: r.labels.clone().unwrap_or_default(),
        })
        .collect()
}

fn summarize(condition: &str, records: &[OutputRecord], stats: AugmentStats) -> MethodSummary {
    let pers: Vec<f64> = records.iter().filter_map(|r| r.per).collect();
    MethodSummary {
        condition: condition.into(),
        stats,
        mean_per: if pers.is_empty() {
            0.0
        } else {
            pers.iter().sum::<f64>() / pers.len() as f64
        },
    }
}

/// Runs the whole comparison. Everything is derived from `cfg.seed`, so two
/// runs with the same config produce identical reports.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    let started = Instant::now();
    let dict = PronouncingDict::bundled();
    let channel = SyntheticChannel::command_default(derive_seed(cfg.seed, "channel"));
    let bench = make_synthetic_benchmark(&channel, &Grammar::default(), cfg.sizes)?;
    info!(
        "benchmark data: {} pairs, {} train, {} test",
        bench.pairs.len(),
        bench.train.len(),
        bench.test.len()
    );

    let ss = extract_ss_table(&bench.pairs, &SsOptions::default())?;
    let rs = build_rs_table(&dict, &bundled_term_frequencies(), cfg.rs_max_phone_edit)?;

    let mut init_rng = seeded(derive_seed(cfg.seed, "ngm-init"));
    let mut generator = NoiseGenerator::for_pairs(
        &bench.pairs,
        cfg.ngm_shape,
        cfg.ngm_max_vocab,
        1,
        cfg.ngm_train.init_std,
        &mut init_rng,
    )?;
    let train_cfg = TrainConfig {
        seed: derive_seed(cfg.seed, "ngm"),
        ..cfg.ngm_train
    };
    let ngm = generator.train(&bench.pairs, &train_cfg)?;
    info!(
        "noise model trained in {:.1}s, held-out perplexity {:.3}",
        started.elapsed().as_secs_f64(),
        ngm.best_perplexity()
    );

    let eda_vocab: Vec<String> = Grammar::default().vocabulary().into_iter().collect();
    let inputs = to_inputs(&bench.train);
    let base = AugmentConfig {
        n_candidates: cfg.n_candidates,
        n_aug: cfg.n_aug,
        substitute_proportion: cfg.substitute_proportion,
        per_threshold: cfg.per_threshold,
        seed: derive_seed(cfg.seed, "augment"),
        generation: cfg.generation,
        jobs: cfg.jobs,
        ..AugmentConfig::new(Method::Ngm)
    };

    let mut conditions = vec![Condition::new(CLEAN, bench.train.clone())];
    let mut augmentation = Vec::new();
    let runs: [(&str, Method, Option<&ConfusionTable>); 4] = [
        (EDA, Method::Eda, None),
        (RS, Method::Rs, Some(&rs)),
        (SS, Method::Ss, Some(&ss)),
        (NGM, Method::Ngm, None),
    ];
    for (name, method, table) in runs {
        let res = Resources {
            table,
            generator: Some(&generator),
            eda_vocab: &eda_vocab,
            ..Resources::new(&dict)
        };
        let aug = AugmentConfig { method, ..base.clone() };
        let pools = generate_candidates(&inputs, &aug, &res)?;
        let out = select_from_pools(&pools, &aug);
        augmentation.push(summarize(name, &out.records, out.stats.clone()));
        conditions.push(Condition::new(name, to_examples(&out.records)));
        if method == Method::Ngm {
            // Same candidates, no threshold.
            let open = AugmentConfig {
                per_threshold: f64::INFINITY,
                ..aug
            };
            let out = select_from_pools(&pools, &open);
            augmentation.push(summarize(NGM_UNFILTERED, &out.records, out.stats.clone()));
            conditions.push(Condition::new(NGM_UNFILTERED, to_examples(&out.records)));
        }
        info!("{name} augmentation done at {:.1}s", started.elapsed().as_secs_f64());
    }

    // Channel outputs standing in for recognizer transcripts of the
    // training audio.
    let mut noisy_train = Vec::with_capacity(bench.train.len() * (1 + cfg.n_aug));
    for (i, e) in bench.train.iter().enumerate() {
        noisy_train.push(e.clone());
        for k in 0..cfg.n_aug {
            noisy_train.push(LabeledExample {
                text: channel.corrupt_indexed(&e.text, "train", i * cfg.n_aug + k),
                labels: e.labels.clone(),
            });
        }
    }
    let mut noisy = Condition::new(NOISY, noisy_train);
    noisy.note = Some("channel emulation".into());
    conditions.push(noisy);

    let table = robustness_experiment(
        &conditions,
        &bench.test_noisy,
        &cfg.classifier,
        cfg.repeats,
        derive_seed(cfg.seed, "slu"),
        cfg.jobs,
    )?;
    let clean_test = robustness_experiment(
        &conditions[..1],
        &bench.test,
        &cfg.classifier,
        1,
        derive_seed(cfg.seed, "slu"),
        1,
    )?;
    info!("benchmark finished in {:.1}s", started.elapsed().as_secs_f64());

    Ok(BenchmarkReport {
        config: cfg.clone(),
        pair_stats: bench.pair_stats,
        ss_entries: ss.len(),
        rs_entries: rs.len(),
        ngm,
        augmentation,
        clean_test_accuracy: clean_test.rows[0].mean.accuracy,
        table,
    })
}
