use anyhow::{Context, Result};
use asr_noise::confusion::CleanNoisyPair;
use asr_noise::generator::{LossScope, NgmConfig, NoiseGenerator, Optimizer, TrainConfig};
use asr_noise::rng::{derive_seed, seeded, substream};
use log::info;
use serde::{Deserialize, Serialize};

use super::{generation_config, read_jsonl, required, write_json, write_jsonl};
use crate::settings::{usage, Settings};
use crate::{GenerateArgs, TrainNgmArgs};

fn default_shape() -> NgmConfig {
    NgmConfig {
        n_layers: 2,
        d_model: 48,
        n_heads: 4,
        d_ff: 96,
        context_window: 48,
        vocab_size: 0,
    }
}

pub fn train(settings: &Settings, args: TrainNgmArgs) -> Result<()> {
    let pairs: Vec<CleanNoisyPair> = read_jsonl(&required(settings, args.pairs, "pairs")?)?;
    let out = required(settings, args.out, "out")?;
    let ds = default_shape();
    let shape = NgmConfig {
        n_layers: settings.pick(args.layers, "layers", ds.n_layers)?,
        d_model: settings.pick(args.d_model, "d-model", ds.d_model)?,
        n_heads: settings.pick(args.heads, "heads", ds.n_heads)?,
        d_ff: settings.pick(args.d_ff, "d-ff", ds.d_ff)?,
        context_window: settings.pick(args.context, "context", ds.context_window)?,
        vocab_size: 0,
    };
    let dt = TrainConfig::default();
    let optimizer = match settings.maybe::<String>(args.optimizer, "optimizer")?.as_deref() {
        None | Some("momentum") => dt.optimizer,
        Some("adam") => Optimizer::adam(),
        Some(other) => return Err(usage(format!("unknown optimizer {other:?}"))),
    };
    let default_lr = if matches!(optimizer, Optimizer::Adam { .. }) { 3e-3 } else { dt.learning_rate };
    let loss_scope = match settings.maybe::<String>(args.loss_scope, "loss-scope")?.as_deref() {
        None | Some("full") => LossScope::FullSequence,
        Some("suffix") => LossScope::NoisySuffix,
        Some(other) => return Err(usage(format!("unknown loss scope {other:?}"))),
    };
    let cfg = TrainConfig {
        steps: settings.pick(args.steps, "steps", 3000)?,
        batch_size: settings.pick(args.batch_size, "batch-size", dt.batch_size)?,
        learning_rate: settings.pick(args.lr, "lr", default_lr)?,
        warmup_steps: settings.pick(args.warmup, "warmup", dt.warmup_steps)?,
        optimizer,
        checkpoint_every: settings.pick(args.checkpoint_every, "checkpoint-every", dt.checkpoint_every)?,
        holdout_fraction: settings.pick(args.holdout, "holdout", dt.holdout_fraction)?,
        loss_scope,
        seed: derive_seed(settings.seed, "ngm"),
        ..dt
    };
    let max_vocab = settings.pick(args.max_vocab, "max-vocab", 2000)?;
    let mut rng = seeded(derive_seed(settings.seed, "ngm-init"));
    let mut generator = NoiseGenerator::for_pairs(&pairs, shape, max_vocab, 1, cfg.init_std, &mut rng)?;
    info!(
        "training on {} pairs, vocabulary {}, {} parameters",
        pairs.len(),
        generator.vocab.len(),
        generator.model.params.num_params()
    );
    let report = generator.train(&pairs, &cfg)?;
    generator.save(&out).with_context(|| format!("writing {}", out.display()))?;
    eprintln!(
        "best held-out perplexity {:.3} at step {} ({} pairs skipped as too long)",
        report.best_perplexity(),
        report.best_step,
        report.skipped_too_long
    );
    if let Some(path) = settings.path(args.report, "report") {
        write_json(&report, Some(&path))?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct TextRecord {
    text: String,
}

#[derive(Serialize)]
struct Generated {
    source_index: usize,
    text: String,
    generated: String,
    truncated: bool,
}

pub fn generate(settings: &Settings, args: GenerateArgs) -> Result<()> {
    let model = required(settings, args.model, "model")?;
    let generator = NoiseGenerator::load(&model).with_context(|| format!("loading {}", model.display()))?;
    let cfg = generation_config(settings, &args.generation)?;
    let n = settings.pick(args.n, "n", 1)?;
    let texts: Vec<String> = match (args.text, settings.path(args.input, "input")) {
        (Some(t), _) => vec![t],
        (None, Some(p)) => read_jsonl::<TextRecord>(&p)?.into_iter().map(|r| r.text).collect(),
        (None, None) => return Err(usage("give --text or --input FILE")),
    };
    let seed = derive_seed(settings.seed, "generate");
    let mut out = Vec::new();
    for (i, text) in texts.iter().enumerate() {
        let mut rng = substream(seed, i as u64);
        for _ in 0..n {
            let g = generator.generate(text, &cfg, &mut rng)?;
            out.push(Generated {
                source_index: i,
                text: text.clone(),
                generated: g.text,
                truncated: g.truncated,
            });
        }
    }
    write_jsonl(&out, settings.path(args.out, "out").as_deref())
}
