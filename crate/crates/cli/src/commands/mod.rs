pub mod augment;
pub mod bench;
pub mod ngm;
pub mod pairs;
pub mod slu;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::settings::{usage, Settings};
use crate::GenerationArgs;
use asr_noise::generator::GenerationConfig;

/// A file, or stdout when no path is given.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    Ok(asr_noise::corpus::load_jsonl(path)?)
}

pub fn write_jsonl<T: Serialize>(items: &[T], path: Option<&Path>) -> Result<()> {
    let mut out = output(path)?;
    asr_noise::corpus::write_jsonl(items, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn required(settings: &Settings, flag: Option<PathBuf>, key: &str) -> Result<PathBuf> {
    settings.require_path(flag, key)
}

pub fn generation_config(settings: &Settings, args: &GenerationArgs) -> Result<GenerationConfig> {
    let d = GenerationConfig::default();
    let cfg = GenerationConfig {
        top_p: settings.pick(args.top_p, "top-p", d.top_p)?,
        temperature: settings.pick(args.temperature, "temperature", d.temperature)?,
        max_new_tokens: settings.pick(args.max_new_tokens, "max-new-tokens", d.max_new_tokens)?,
        seed: settings.seed,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}
