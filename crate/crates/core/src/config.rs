//! Flat `key = value` experiment files. Blank lines and `#` comments are
//! ignored; dashes and underscores in keys are interchangeable.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    values: BTreeMap<String, (String, usize)>,
}

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

impl ConfigFile {
    pub fn parse(source: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (idx, raw) in source.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let key = normalize_key(key);
            if key.is_empty() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "empty key".into(),
                });
            }
            let value = value.trim().trim_matches('"').to_string();
            if values.insert(key.clone(), (value, idx + 1)).is_some() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("key {key:?} set twice"),
                });
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize_key(key)).map(|(v, _)| v.as_str())
    }

    /// The value under `key`, parsed.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(&normalize_key(key)) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|e| Error::Parse {
                line: *line,
                message: format!("{key}: {e}"),
            }),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Parses a float that may be written `inf`.
pub fn parse_threshold(s: &str) -> Result<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "none" => Ok(f64::INFINITY),
        other => other
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad threshold {s:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_normalizes_keys() {
        let c = ConfigFile::parse("# run\nseed = 7\nper_threshold = 0.5  # filter\n\nmethod = \"ngm\"\n").unwrap();
        assert_eq!(c.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(c.get::<f64>("per-threshold").unwrap(), Some(0.5));
        assert_eq!(c.raw("method"), Some("ngm"));
        assert_eq!(c.get::<u64>("jobs").unwrap(), None);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match ConfigFile::parse("a = 1\nnonsense\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let c = ConfigFile::parse("\nseed = x\n").unwrap();
        assert!(matches!(c.get::<u64>("seed"), Err(Error::Parse { line: 2, .. })));
        assert!(ConfigFile::parse("a = 1\na = 2\n").is_err());
    }

    #[test]
    fn infinite_thresholds() {
        assert_eq!(parse_threshold("inf").unwrap(), f64::INFINITY);
        assert_eq!(parse_threshold("1.0").unwrap(), 1.0);
        assert!(parse_threshold("x").is_err());
    }
}
