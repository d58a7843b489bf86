//! Plain-text `key = value` configuration files.
//!
//! One entry per line, `#` starts a comment, blank lines are ignored. Keys
//! are unique; values are whitespace-separated tokens in decimal notation.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct KvFile {
    entries: BTreeMap<String, (usize, String)>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config {
                    line: line_no,
                    message: "empty key".into(),
                });
            }
            if entries
                .insert(key.clone(), (line_no, value.trim().to_string()))
                .is_some()
            {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Self { entries })
    }

    /// Removes and parses a single-token value.
    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, value)) => value.parse().map(Some).map_err(|_| Error::Config {
                line,
                message: format!("cannot parse value `{value}` for `{key}`"),
            }),
        }
    }

    /// Removes a value and splits it into tokens.
    pub fn take_tokens(&mut self, key: &str) -> Option<(usize, Vec<String>)> {
        self.entries
            .remove(key)
            .map(|(line, v)| (line, v.split_whitespace().map(str::to_string).collect()))
    }

    /// Fails on the first key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(Error::Config {
                line,
                message: format!("unknown key `{key}`"),
            }),
        }
    }
}

pub(crate) fn parse_f64(line: usize, key: &str, token: &str) -> Result<f64> {
    token.parse::<f64>().map_err(|_| Error::Config {
        line,
        message: format!("`{token}` is not a number (key `{key}`)"),
    })
}
