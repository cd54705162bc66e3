//! Flat `key = value` settings files.
//!
//! Blank lines and lines starting with `#` are ignored. Recognised keys:
//! `seed`, `folds`, `inner_folds`, `jobs`, `granularity`, `balanced`
//! (`true`, `false` or `both`), `algorithms` (comma separated), `lenient`,
//! `per_class` and `discretization`.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

pub const KEYS: [&str; 10] = [
    "seed",
    "folds",
    "inner_folds",
    "jobs",
    "granularity",
    "balanced",
    "algorithms",
    "lenient",
    "per_class",
    "discretization",
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config line {}: expected `key = value`",
                    n + 1
                )));
            };
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key `{key}`",
                    n + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Typed lookup; a value that does not parse is a usage error.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|raw| {
                raw.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Flag value, else config value, else the default.
pub fn resolve<T: FromStr>(flag: Option<T>, config: &ConfigFile, key: &str, default: T) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(v),
        None => Ok(config.get(key)?.unwrap_or(default)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves() {
        let cfg = ConfigFile::parse("# run\nseed = 7\n\ninner-folds=5\nbalanced = both\n").unwrap();
        assert_eq!(cfg.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(cfg.get::<usize>("inner_folds").unwrap(), Some(5));
        assert_eq!(cfg.raw("balanced"), Some("both"));
        assert_eq!(resolve(Some(1u64), &cfg, "seed", 42).unwrap(), 1);
        assert_eq!(resolve(None, &cfg, "seed", 42u64).unwrap(), 7);
        assert_eq!(resolve(None, &cfg, "folds", 10usize).unwrap(), 10);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            ConfigFile::parse("colour = red"),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(ConfigFile::parse("seed"), Err(CliError::Usage(_))));
        let cfg = ConfigFile::parse("seed = lots").unwrap();
        assert!(cfg.get::<u64>("seed").is_err());
    }
}
