use anyhow::{Context, Result};
use asr_noise::augment::{augment_corpus, AugmentConfig, InputRecord, Method, Resources};
use asr_noise::confusion::{ConfusionTable, Provenance};
use asr_noise::generator::NoiseGenerator;
use asr_noise::text::tokenize;

use super::{generation_config, read_jsonl, write_jsonl};
use crate::settings::{usage, Settings};
use crate::AugmentArgs;

pub fn run(settings: &Settings, args: AugmentArgs) -> Result<()> {
    let method: Method = settings
        .maybe::<String>(args.method, "method")?
        .ok_or_else(|| usage("missing --method (rs, ss, eda or ngm)"))?
        .parse()
        .map_err(|e: asr_noise::Error| usage(e.to_string()))?;
    let dict = settings.dictionary(args.dict)?;
    let inputs: Vec<InputRecord> = read_jsonl(&args.input)?;

    let table = match method {
        Method::Rs | Method::Ss => {
            let path = settings
                .path(args.table, "table")
                .ok_or_else(|| usage(format!("method {method} needs --table")))?;
            let default = if method == Method::Rs {
                Provenance::Rule
            } else {
                Provenance::Statistic
            };
            Some(ConfusionTable::load_tsv(&path, default).with_context(|| format!("loading {}", path.display()))?)
        }
        _ => None,
    };
    let generator = match method {
        Method::Ngm => {
            let path = settings
                .path(args.model, "model")
                .ok_or_else(|| usage("method ngm needs --model"))?;
            Some(NoiseGenerator::load(&path).with_context(|| format!("loading {}", path.display()))?)
        }
        _ => None,
    };
    // EDA draws replacements from the words of the corpus itself.
    let mut eda_vocab: Vec<String> = inputs.iter().flat_map(|r| tokenize(&r.text)).collect();
    eda_vocab.sort();
    eda_vocab.dedup();

    let d = AugmentConfig::new(method);
    let cfg = AugmentConfig {
        method,
        n_candidates: settings.pick(args.n_candidates, "n-candidates", d.n_candidates)?,
        n_aug: settings.pick(args.n_aug, "n-aug", d.n_aug)?,
        substitute_proportion: settings.pick(args.proportion, "prop", d.substitute_proportion)?,
        per_threshold: settings.threshold(args.per_threshold, "per-threshold", d.per_threshold)?,
        seed: settings.seed,
        generation: generation_config(settings, &args.generation)?,
        jobs: settings.jobs,
    };
    let res = Resources {
        table: table.as_ref(),
        generator: generator.as_ref(),
        eda_vocab: &eda_vocab,
        ..Resources::new(&dict)
    };
    let out = augment_corpus(&inputs, &cfg, &res)?;
    write_jsonl(&out.records, Some(&args.output))?;
    if let Some(path) = settings.path(args.samples, "samples") {
        write_jsonl(&out.samples, Some(&path))?;
    }
    let s = &out.stats;
    eprintln!(
        "{} inputs, {} candidates, {} kept; {} bypassed (no phones), {} fully filtered",
        s.inputs, s.candidates, s.kept, s.bypassed, s.all_filtered
    );
    Ok(())
}
