use anyhow::{Context, Result};
use asr_noise::augment::{per_alignment, per_score};
use asr_noise::confusion::{build_rs_table, extract_ss_table, CleanNoisyPair, SsOptions};
use asr_noise::corpus::{collect_pairs, KeyedText};
use asr_noise::lexicon::{bundled_term_frequencies, parse_term_frequencies};
use asr_noise::text::NormalizationPolicy;
use serde::{Deserialize, Serialize};

use super::{output, read_jsonl, required, write_jsonl};
use crate::settings::{usage, Settings};
use crate::{CollectPairsArgs, ExtractArgs, PerArgs, RsArgs};

pub fn collect(settings: &Settings, args: CollectPairsArgs) -> Result<()> {
    let refs: Vec<KeyedText> = read_jsonl(&required(settings, args.refs, "refs")?)?;
    let hyps: Vec<KeyedText> = read_jsonl(&required(settings, args.hyps, "hyps")?)?;
    let policy = NormalizationPolicy {
        lowercase: !(args.keep_case || settings.pick(None, "keep-case", false)?),
        strip_punctuation: !(args.keep_punctuation || settings.pick(None, "keep-punctuation", false)?),
    };
    let (pairs, stats) = collect_pairs(&refs, &hyps, policy);
    write_jsonl(&pairs, settings.path(args.out, "out").as_deref())?;
    eprintln!(
        "{} joined, {} dropped as matching, {} kept ({} without hypothesis, {} without reference)",
        stats.total, stats.matched, stats.kept, stats.missing_hypothesis, stats.missing_reference
    );
    Ok(())
}

pub fn extract(settings: &Settings, args: ExtractArgs) -> Result<()> {
    let pairs: Vec<CleanNoisyPair> = read_jsonl(&required(settings, args.pairs, "pairs")?)?;
    let d = SsOptions::default();
    let opts = SsOptions {
        max_ngram: settings.pick(args.max_ngram, "max-ngram", d.max_ngram)?,
        min_count: settings.pick(args.min_count, "min-count", d.min_count)?,
        ..d
    };
    let table = extract_ss_table(&pairs, &opts)?;
    let mut out = output(settings.path(args.out, "out").as_deref())?;
    table.write_tsv(&mut out)?;
    out.flush()?;
    eprintln!("{} source n-grams from {} pairs", table.len(), pairs.len());
    Ok(())
}

pub fn rs_table(settings: &Settings, args: RsArgs) -> Result<()> {
    let dict = settings.dictionary(args.dict)?;
    let vocab = match settings.path(args.vocab, "vocab") {
        Some(p) => {
            let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            parse_term_frequencies(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => bundled_term_frequencies(),
    };
    let max_edit = settings.pick(args.max_phone_edit, "max-phone-edit", 2)?;
    let table = build_rs_table(&dict, &vocab, max_edit)?;
    let mut out = output(settings.path(args.out, "out").as_deref())?;
    table.write_tsv(&mut out)?;
    out.flush()?;
    eprintln!("{} source words with phonetic neighbours", table.len());
    Ok(())
}

#[derive(Deserialize)]
struct PerInput {
    original: String,
    generated: String,
}

#[derive(Serialize)]
struct PerOutput {
    original: String,
    generated: String,
    per: Option<f64>,
}

pub fn per(settings: &Settings, args: PerArgs) -> Result<()> {
    let dict = settings.dictionary(args.dict)?;
    if let (Some(orig), Some(gen)) = (&args.orig, &args.gen) {
        let score = per_score(&dict, orig, gen)?;
        if args.explain {
            let path = per_alignment(&dict, orig, gen);
            println!("original:  {}", path.reference.join(" "));
            println!("generated: {}", path.hypothesis.join(" "));
            println!("edits:     {}", path.distance);
        }
        println!("{score:.4}");
        return Ok(());
    }
    let Some(input) = settings.path(args.input, "input") else {
        return Err(usage("give --orig and --gen, or --input FILE"));
    };
    let rows: Vec<PerInput> = read_jsonl(&input)?;
    let scored: Vec<PerOutput> = rows
        .into_iter()
        .map(|r| PerOutput {
            per: per_score(&dict, &r.original, &r.generated).ok(),
            original: r.original,
            generated: r.generated,
        })
        .collect();
    write_jsonl(&scored, settings.path(args.out, "out").as_deref())
}
