//! Plain `key = value` config files mirroring the command-line flags.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use icstbc::error::{Error, Result};

/// Parsed config file. Empty when no path was given.
#[derive(Debug)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    /// Loads and validates a config file. Keys must come from `known_keys`,
    /// which mirrors the long flag names of the invoking subcommand.
    pub fn load(path: Option<&Path>, known_keys: &[&str]) -> Result<Self> {
        let mut values = HashMap::new();
        let Some(path) = path else {
            return Ok(Self { values });
        };
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "{}:{}: expected `key = value`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            if !known_keys.contains(&key) {
                return Err(Error::InvalidConfig(format!(
                    "{}:{}: unknown key `{key}`",
                    path.display(),
                    lineno + 1
                )));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    /// Raw string value.
    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parsed value; `Ok(None)` when absent.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidConfig(format!("config key `{key}`: bad value `{raw}`"))
            }),
        }
    }
}
