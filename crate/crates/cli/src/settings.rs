//! Flag/config-file merging and the usage-error marker.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use asr_noise::config::ConfigFile;
use asr_noise::lexicon::PronouncingDict;
use log::warn;

/// An error caused by how the tool was invoked rather than by the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Resolves option values: command-line flag, then config file, then the
/// built-in default.
pub struct Settings {
    file: ConfigFile,
    consulted: RefCell<BTreeSet<String>>,
    pub seed: u64,
    pub jobs: usize,
}

impl Settings {
    pub fn new(config: Option<&Path>, seed: Option<u64>, jobs: Option<usize>) -> Result<Self> {
        let file = match config {
            Some(path) => ConfigFile::load(path)
                .with_context(|| format!("reading config {}", path.display()))
                .map_err(|e| usage(format!("{e:#}")))?,
            None => ConfigFile::default(),
        };
        let mut s = Self {
            file,
            consulted: RefCell::default(),
            seed: 0,
            jobs: 1,
        };
        s.seed = s.pick(seed, "seed", 0)?;
        s.jobs = s.pick(jobs, "jobs", 1)?;
        Ok(s)
    }

    pub fn pick<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        Ok(self.maybe(flag, key)?.unwrap_or(default))
    }

    pub fn maybe<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        self.note(key);
        if flag.is_some() {
            return Ok(flag);
        }
        self.file.get(key).map_err(|e| usage(format!("config: {e}")))
    }

    fn note(&self, key: &str) {
        self.consulted.borrow_mut().insert(key.replace('_', "-"));
    }

    /// Config keys the command never looked at, most likely typos.
    pub fn unused_keys(&self) -> Vec<String> {
        let seen = self.consulted.borrow();
        self.file.keys().filter(|k| !seen.contains(*k)).map(str::to_owned).collect()
    }

    pub fn path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        self.note(key);
        flag.or_else(|| self.file.raw(key).map(PathBuf::from))
    }

    pub fn require_path(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf> {
        self.path(flag, key)
            .ok_or_else(|| usage(format!("missing --{key} (or `{key} = ...` in the config file)")))
    }

    pub fn threshold(&self, flag: Option<String>, key: &str, default: f64) -> Result<f64> {
        self.note(key);
        match flag.or_else(|| self.file.raw(key).map(str::to_owned)) {
            Some(v) => asr_noise::config::parse_threshold(&v).map_err(|e| usage(e.to_string())),
            None => Ok(default),
        }
    }

    /// The dictionary at `--dict`, or the bundled subset.
    pub fn dictionary(&self, flag: Option<PathBuf>) -> Result<PronouncingDict> {
        match self.path(flag, "dict") {
            Some(path) => {
                let (dict, warnings) = PronouncingDict::open(&path)
                    .with_context(|| format!("loading dictionary {}", path.display()))?;
                for w in warnings.iter().take(10) {
                    warn!("{}: {w}", path.display());
                }
                if warnings.len() > 10 {
                    warn!("{}: {} more warnings", path.display(), warnings.len() - 10);
                }
                Ok(dict)
            }
            None => Ok(PronouncingDict::bundled()),
        }
    }
}
