//! Flat `key = value` configuration files. Keys are long flag names
//! without the leading dashes; `#` starts a comment.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

pub const KEYS: &[&str] = &[
    "law",
    "k",
    "n",
    "seed",
    "out",
    "cap",
    "alpha",
    "s",
    "grid-n",
    "horizon",
    "epsilon",
    "trials",
    "checks",
    "n-values",
    "samples",
    "ks-max",
    "ks-min-n",
    "trend-se",
    "sup-hc-factor",
    "reference-samples",
    "reference-grid",
    "calibration-samples",
    "input",
    "distances",
];

#[derive(Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, (usize, String)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("config line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Validation(format!("config line {}: unknown key `{key}`", i + 1)));
            }
            if entries.insert(key.clone(), (i + 1, value.trim().to_string())).is_some() {
                return Err(CliError::Validation(format!("config line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Config { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The flag value if given, else the config value, parsed as `T`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw
                .parse()
                .map(Some)
                .map_err(|e| CliError::Validation(format!("config line {line}, key `{key}`: {e}"))),
        }
    }

    pub fn pick_or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.pick(flag, key)?
            .ok_or_else(|| CliError::Validation(format!("missing required parameter `--{key}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_errors() {
        let c = Config::parse("# comment\nk = 3\nlaw=binary # trailing\n\n").unwrap();
        assert_eq!(c.pick::<u64>(None, "k").unwrap(), Some(3));
        assert_eq!(c.pick::<u64>(Some(5), "k").unwrap(), Some(5));
        assert_eq!(c.pick_or::<u64>(None, "n", 9).unwrap(), 9);
        assert!(c.require::<u64>(None, "seed").is_err());
        assert!(Config::parse("bogus = 1").is_err());
        assert!(Config::parse("k 1").is_err());
        assert!(Config::parse("k = 1\nk = 2").is_err());
        let c = Config::parse("k = x").unwrap();
        let err = c.pick::<u64>(None, "k").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }
}
