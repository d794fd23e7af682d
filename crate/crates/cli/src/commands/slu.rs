use anyhow::{Context, Result};
use asr_noise::slu::{train_classifier, ClassifierConfig, ClassifierModel, LabeledExample, LossMode};
use asr_noise::rng::derive_seed;
use serde::Serialize;

use super::{read_jsonl, required, write_json};
use crate::settings::{usage, Settings};
use crate::{EvalSluArgs, TrainSluArgs};

pub fn train(settings: &Settings, args: TrainSluArgs) -> Result<()> {
    let data: Vec<LabeledExample> = read_jsonl(&required(settings, args.train, "train")?)?;
    let out = required(settings, args.out, "out")?;
    let c = args.classifier;
    let d = ClassifierConfig::default();
    let mode = match settings.maybe::<String>(c.mode, "mode")? {
        Some(m) => m.parse::<LossMode>().map_err(|e| usage(e.to_string()))?,
        None => d.mode,
    };
    let cfg = ClassifierConfig {
        mode,
        epochs: settings.pick(c.epochs, "epochs", d.epochs)?,
        learning_rate: settings.pick(c.lr, "lr", d.learning_rate)?,
        dim: settings.pick(c.dim, "dim", d.dim)?,
        n_buckets: settings.pick(c.buckets, "buckets", d.n_buckets)?,
        ..d
    };
    let (model, report) = train_classifier(&data, &cfg, derive_seed(settings.seed, "slu"))?;
    model.save(&out).with_context(|| format!("writing {}", out.display()))?;
    eprintln!(
        "{} intents, final epoch loss {:.4}",
        model.n_intents(),
        report.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    examples: usize,
    mode: LossMode,
    exact_match: f64,
    accuracy: f64,
    f1: f64,
}

pub fn eval(settings: &Settings, args: EvalSluArgs) -> Result<()> {
    let path = required(settings, args.model, "model")?;
    let model = ClassifierModel::load(&path).with_context(|| format!("loading {}", path.display()))?;
    let test: Vec<LabeledExample> = read_jsonl(&required(settings, args.test, "test")?)?;
    let m = model.evaluate(&test)?;
    let report = EvalReport {
        examples: test.len(),
        mode: model.config.mode,
        exact_match: m.exact_match,
        accuracy: m.accuracy,
        f1: m.f1,
    };
    write_json(&report, settings.path(args.out, "out").as_deref())
}
