//! Flat `key=value` configuration files for the simulate subcommand.
//! Lines starting with `#` and blank lines are ignored.

use std::collections::HashMap;
use std::path::Path;

use bandwidth_puzzle::{Error, Result};

pub struct KvConfig {
    values: HashMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Format {
                what: "config",
                detail: format!("line {}: expected key=value, got {line:?}", lineno + 1),
            })?;
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(KvConfig { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key).ok_or_else(|| Error::Format {
            what: "config",
            detail: format!("missing key {key}"),
        })?;
        raw.parse().map_err(|_| Error::Format {
            what: "config",
            detail: format!("key {key}: cannot parse {raw:?}"),
        })
    }

    pub fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw.parse().map_err(|_| Error::Format {
                what: "config",
                detail: format!("key {key}: cannot parse {raw:?}"),
            }),
        }
    }

    /// Parses either a comma list (`10,20,30`) or a range (`10:100:10`).
    pub fn u64_list(&self, key: &str) -> Result<Vec<u64>> {
        let raw = self.get(key).ok_or_else(|| Error::Format {
            what: "config",
            detail: format!("missing key {key}"),
        })?;
        parse_u64_list(raw)
    }
}

pub fn parse_u64_list(raw: &str) -> Result<Vec<u64>> {
    let bad = |detail: String| Error::Format {
        what: "list",
        detail,
    };
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("range must be lo:hi:step, got {raw:?}")));
        }
        let lo: u64 = parts[0]
            .parse()
            .map_err(|_| bad(format!("bad lo in {raw:?}")))?;
        let hi: u64 = parts[1]
            .parse()
            .map_err(|_| bad(format!("bad hi in {raw:?}")))?;
        let step: u64 = parts[2]
            .parse()
            .map_err(|_| bad(format!("bad step in {raw:?}")))?;
        if step == 0 {
            return Err(bad("step must be positive".into()));
        }
        Ok((lo..=hi).step_by(step as usize).collect())
    } else {
        raw.split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| bad(format!("bad entry {p:?}")))
            })
            .collect()
    }
}
