//! Flat `key = value` configuration files. `#` starts a comment.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exmas::BehavioralParams;

#[derive(Clone, Debug, Default)]
pub struct FlatConfig {
    name: String,
    entries: BTreeMap<String, (String, u64)>,
}

impl FlatConfig {
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::malformed(name, line_no, "expected `key = value`"))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::malformed(name, line_no, "empty key"));
            }
            if entries
                .insert(key.clone(), (value.trim().to_string(), line_no))
                .is_some()
            {
                return Err(Error::malformed(name, line_no, format!("duplicate key `{key}`")));
            }
        }
        Ok(FlatConfig {
            name: name.to_string(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Rejects keys outside `allowed`, naming the offending line.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for (key, (_, line)) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::malformed(&self.name, *line, format!("unknown key `{key}`")));
            }
        }
        Ok(())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((value, line)) => value
                .parse()
                .map(Some)
                .map_err(|e: T::Err| Error::malformed(&self.name, *line, format!("`{key}`: {e}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some((value, line)) = self.entries.get(key) else {
            return Ok(None);
        };
        value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e: T::Err| Error::malformed(&self.name, *line, format!("`{key}` item `{s}`: {e}")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }
}

pub const PARAM_KEYS: [&str; 5] = ["beta_c", "beta_t", "beta_s", "beta_d", "lambda"];

/// Overrides `base` with any behavioral keys present in `cfg`.
pub fn params_from(cfg: &FlatConfig, base: BehavioralParams) -> Result<BehavioralParams> {
    Ok(BehavioralParams {
        beta_c: cfg.get_or("beta_c", base.beta_c)?,
        beta_t: cfg.get_or("beta_t", base.beta_t)?,
        beta_s: cfg.get_or("beta_s", base.beta_s)?,
        beta_d: cfg.get_or("beta_d", base.beta_d)?,
        lambda: cfg.get_or("lambda", base.lambda)?,
    })
}

/// Reads a params file (`beta_c`, `beta_t`, `beta_s`, `beta_d`, optional `lambda`).
pub fn load_params(path: &Path) -> Result<BehavioralParams> {
    let cfg = FlatConfig::load(path)?;
    cfg.check_keys(&PARAM_KEYS)?;
    params_from(&cfg, BehavioralParams::default())
}
