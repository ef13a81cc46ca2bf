//! `key = value` configuration files. Keys use the long flag names without
//! dashes (`nodes`, `train-frac`, ...); `#` starts a comment.

use std::collections::BTreeMap;

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> AppResult<Self> {
        let mut values = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| AppError::Usage(format!("config line {}: expected `key = value`", k + 1)))?;
            let key = key.trim().replace('_', "-");
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(AppError::Usage(format!("config line {}: `{key}` set twice", k + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let c = Config::parse("# grid\nnodes = 40,60\ntrain_frac=0.8 # note\n\n").unwrap();
        assert_eq!(c.get("nodes"), Some("40,60"));
        assert_eq!(c.get("train-frac"), Some("0.8"));
        assert!(Config::parse("nodes 40").is_err());
        assert!(Config::parse("a=1\na=2").is_err());
    }
}
