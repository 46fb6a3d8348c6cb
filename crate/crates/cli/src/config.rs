//! `key = value` config files. Values act as defaults; command-line flags win.

use std::collections::HashMap;
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|msg| Error::Format(format!("{}: {msg}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut values = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> std::result::Result<Option<f64>, String> {
        self.values
            .get(key)
            .map(|v| v.parse::<f64>().map_err(|e| format!("{key}: {e}")))
            .transpose()
    }

    pub fn get_u64(&self, key: &str) -> std::result::Result<Option<u64>, String> {
        self.values
            .get(key)
            .map(|v| v.parse::<u64>().map_err(|e| format!("{key}: {e}")))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_skips_comments() {
        let cfg = ConfigFile::parse("# comment\nlr = 0.02\n\nkp= 1.5\n").unwrap();
        assert_eq!(cfg.get("lr"), Some("0.02"));
        assert_eq!(cfg.get_f64("kp").unwrap(), Some(1.5));
        assert_eq!(cfg.get("missing"), None);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(ConfigFile::parse("just a line").is_err());
    }
}
