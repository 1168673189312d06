//! Flat key = value config files with CLI-flag overrides; flags win.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

/// Parameter resolution failure: missing required keys, unparseable values,
/// malformed config lines. Mapped to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: String) -> Result<T> {
    Err(anyhow::Error::new(UsageError(msg)))
}

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    map: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {} is not `key = value`: {line}", lineno + 1);
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { map })
    }

    /// Flag value if present, else config-file value, else the default.
    pub fn resolve<T: FromStr + Clone>(&self, key: &str, flag: &Option<T>, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v.clone());
        }
        match self.map.get(key) {
            Some(raw) => match raw.parse::<T>() {
                Ok(v) => Ok(v),
                Err(e) => usage(format!("config key {key} = {raw}: {e}")),
            },
            None => Ok(default),
        }
    }

    /// Flag value if present, else config-file value, else an error.
    pub fn require<T: FromStr + Clone>(&self, key: &str, flag: &Option<T>) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.optional(key, flag)? {
            Some(v) => Ok(v),
            None => usage(format!("missing required parameter `{key}` (flag or config file)")),
        }
    }

    /// Flag value if present, else config-file value, else None.
    pub fn optional<T: FromStr + Clone>(&self, key: &str, flag: &Option<T>) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(Some(v.clone()));
        }
        match self.map.get(key) {
            Some(raw) => match raw.parse::<T>() {
                Ok(v) => Ok(Some(v)),
                Err(e) => usage(format!("config key {key} = {raw}: {e}")),
            },
            None => Ok(None),
        }
    }
}
