use anyhow::{Context, Result};
use asr_noise::benchmark::{run_benchmark, BenchmarkConfig};
use asr_noise::corpus::{make_synthetic_benchmark, BenchmarkSizes, Grammar, SyntheticChannel};
use asr_noise::rng::derive_seed;
use asr_noise::slu::format_table;

use super::{required, write_json};
use crate::settings::Settings;
use crate::{BenchmarkArgs, MakeSynthArgs, SizeArgs};

fn sizes(settings: &Settings, args: &SizeArgs) -> Result<BenchmarkSizes> {
    let d = BenchmarkSizes::default();
    Ok(BenchmarkSizes {
        pair_sentences: settings.pick(args.pair_sentences, "pair-sentences", d.pair_sentences)?,
        train: settings.pick(args.train_size, "train-size", d.train)?,
        dev: settings.pick(args.dev_size, "dev-size", d.dev)?,
        test: settings.pick(args.test_size, "test-size", d.test)?,
    })
}

pub fn benchmark(settings: &Settings, args: BenchmarkArgs) -> Result<()> {
    let d = BenchmarkConfig::default();
    let cfg = BenchmarkConfig {
        seed: settings.seed,
        jobs: settings.jobs,
        sizes: sizes(settings, &args.sizes)?,
        repeats: settings.pick(args.repeats, "repeats", d.repeats)?,
        n_aug: settings.pick(args.n_aug, "n-aug", d.n_aug)?,
        per_threshold: settings.threshold(args.per_threshold, "per-threshold", d.per_threshold)?,
        ngm_train: asr_noise::generator::TrainConfig {
            steps: settings.pick(args.steps, "steps", d.ngm_train.steps)?,
            ..d.ngm_train.clone()
        },
        ..d
    };
    let report = run_benchmark(&cfg)?;
    let table = format_table(&report.table);
    print!("{table}");
    if let Some(dir) = settings.path(args.out_dir, "out-dir") {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        write_json(&report, Some(&dir.join("report.json")))?;
        std::fs::write(dir.join("table.txt"), &table)?;
    }
    Ok(())
}

pub fn make_synth(settings: &Settings, args: MakeSynthArgs) -> Result<()> {
    let dir = required(settings, args.out_dir, "out-dir")?;
    let channel = match settings.path(args.channel, "channel") {
        Some(p) => SyntheticChannel::load(&p).with_context(|| format!("loading {}", p.display()))?,
        None => SyntheticChannel::command_default(derive_seed(settings.seed, "channel")),
    };
    let bench = make_synthetic_benchmark(&channel, &Grammar::default(), sizes(settings, &args.sizes)?)?;
    bench.write_to(&dir)?;
    eprintln!(
        "wrote {} pairs, {} train, {} dev, {} test examples to {}",
        bench.pairs.len(),
        bench.train.len(),
        bench.dev.len(),
        bench.test.len(),
        dir.display()
    );
    Ok(())
}
