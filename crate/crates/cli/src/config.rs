//! Optional line-oriented `key = value` config file. Flags override config
//! values, config values override built-in defaults. No environment
//! variables are consulted, so runs are reproducible from the command line
//! plus the file.

use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| format!("config key {key} = {v}: {e}")),
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| format!("config key {key} = {v}: {e}")),
        }
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }
}

/// Resolve one scalar setting: flag, then config, then default.
pub fn resolve_f64(flag: Option<f64>, cfg: &ConfigFile, key: &str, default: f64) -> Result<f64, String> {
    if let Some(v) = flag {
        return Ok(v);
    }
    Ok(cfg.get_f64(key)?.unwrap_or(default))
}

pub fn resolve_usize(flag: Option<usize>, cfg: &ConfigFile, key: &str, default: usize) -> Result<usize, String> {
    if let Some(v) = flag {
        return Ok(v);
    }
    Ok(cfg.get_usize(key)?.unwrap_or(default))
}
