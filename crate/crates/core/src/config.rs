//! `key = value` configuration files.
//!
//! One pair per line, `#` starts a comment, blank lines are ignored. Later
//! duplicates win. Keys may use `-` or `_` interchangeably.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            let key = key.trim().replace('-', "_");
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            let value = value.trim().to_string();
            entries.retain(|(k, _)| *k != key);
            entries.push((key, value));
        }
        Ok(KeyValues { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        let key = key.replace('-', "_");
        self.entries
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Set `key`, replacing any earlier value.
    pub fn insert(&mut self, key: &str, value: impl Into<String>) {
        let key = key.replace('-', "_");
        self.entries.retain(|(k, _)| *k != key);
        self.entries.push((key, value.into()));
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn parse_value<T: FromStr>(&self, key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
    }

    pub fn parse_list<T: FromStr>(&self, key: &str, value: &str) -> Result<Vec<T>> {
        value
            .split(',')
            .map(|v| self.parse_value(key, v.trim()))
            .collect()
    }

    /// Render as `--key value` command-line arguments, booleans as bare flags.
    pub fn to_args(&self) -> Vec<String> {
        let mut args = Vec::new();
        for (k, v) in &self.entries {
            let flag = format!("--{}", k.replace('_', "-"));
            match v.as_str() {
                "true" => args.push(flag),
                "false" => {}
                _ => {
                    args.push(flag);
                    args.push(v.clone());
                }
            }
        }
        args
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_duplicates() {
        let kv = KeyValues::parse("a = 1 # one\n\n  b-c=x,y\na=2\n").unwrap();
        assert_eq!(kv.get("a"), Some("2"));
        assert_eq!(kv.get("b_c"), Some("x,y"));
        assert_eq!(kv.get("b-c"), Some("x,y"));
        assert_eq!(kv.iter().count(), 2);
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(KeyValues::parse("just words").is_err());
        assert!(KeyValues::parse("= 3").is_err());
    }

    #[test]
    fn renders_args() {
        let kv = KeyValues::parse("window = 49\ncalibrated = true\nquiet = false").unwrap();
        assert_eq!(kv.to_args(), vec!["--window", "49", "--calibrated"]);
    }
}
