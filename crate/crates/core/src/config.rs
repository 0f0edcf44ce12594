//! Minimal `key = value` config files with `[section]` headers. CLI flags
//! override file values; the resolved configuration is embedded in every
//! emitted report for replay.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Result, ZslError};

/// Parsed config file: `(section, key) → value`. Keys before any section
/// header live in the empty section.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<(String, String), String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| ZslError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                ZslError::parse(path, idx + 1, "expected 'key = value' or '[section]'")
            })?;
            values.insert(
                (section.clone(), k.trim().to_string()),
                v.trim().to_string(),
            );
        }
        Ok(ConfigFile { values })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .map(String::as_str)
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                ZslError::InvalidConfig(format!("bad value for [{section}] {key}: '{v}'"))
            }),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
