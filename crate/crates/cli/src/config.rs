//! Flat key-value run configuration.
//!
//! Config files hold one `key = value` pair per line; `#` starts a comment.
//! Every accessed key is recorded with its resolved value (defaults
//! included), so the manifest's config snapshot re-parses to an equivalent
//! configuration. Unknown keys are rejected to catch typos.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use crate::error::CliError;

#[derive(Debug)]
pub struct Cfg {
    values: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
    accessed: BTreeSet<String>,
}

impl Cfg {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (line_no, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {}: expected `key = value`, got {raw_line:?}",
                    line_no + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Config(format!("line {}: empty key", line_no + 1)));
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(CliError::Config(format!("duplicate key {key:?}")));
            }
        }
        Ok(Self {
            values,
            resolved: BTreeMap::new(),
            accessed: BTreeSet::new(),
        })
    }

    /// Override a key (CLI flags beat the file).
    pub fn set(&mut self, key: &str, value: String) {
        self.values.insert(key.to_string(), value);
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn record(&mut self, key: &str, value: String) {
        self.accessed.insert(key.to_string());
        self.resolved.insert(key.to_string(), value);
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        self.accessed.insert(key.to_string());
        self.values.get(key).cloned()
    }

    pub fn get_str(&mut self, key: &str) -> Result<String, CliError> {
        let value = self
            .raw(key)
            .ok_or_else(|| CliError::Config(format!("missing required key {key:?}")))?;
        self.record(key, value.clone());
        Ok(value)
    }

    pub fn get_str_or(&mut self, key: &str, default: &str) -> String {
        let value = self.raw(key).unwrap_or_else(|| default.to_string());
        self.record(key, value.clone());
        value
    }

    pub fn get_path(&mut self, key: &str) -> Result<PathBuf, CliError> {
        Ok(PathBuf::from(self.get_str(key)?))
    }

    pub fn get_path_opt(&mut self, key: &str) -> Option<PathBuf> {
        let value = self.raw(key)?;
        self.record(key, value.clone());
        Some(PathBuf::from(value))
    }

    fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
        value
            .parse::<T>()
            .map_err(|_| CliError::Config(format!("key {key:?}: cannot parse {value:?}")))
    }

    pub fn get_u64(&mut self, key: &str) -> Result<u64, CliError> {
        let value = self
            .raw(key)
            .ok_or_else(|| CliError::Config(format!("missing required key {key:?}")))?;
        let parsed = Self::parse_value::<u64>(key, &value)?;
        self.record(key, parsed.to_string());
        Ok(parsed)
    }

    pub fn get_usize_or(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        let value = match self.raw(key) {
            Some(v) => Self::parse_value::<usize>(key, &v)?,
            None => default,
        };
        self.record(key, value.to_string());
        Ok(value)
    }

    pub fn get_f64_or(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        let value = match self.raw(key) {
            Some(v) => Self::parse_value::<f64>(key, &v)?,
            None => default,
        };
        if !value.is_finite() {
            return Err(CliError::Config(format!("key {key:?}: must be finite")));
        }
        self.record(key, value.to_string());
        Ok(value)
    }

    /// Probability-valued parameter; must lie strictly inside (0, 1).
    pub fn get_prob_or(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        let value = self.get_f64_or(key, default)?;
        if !(value > 0.0 && value < 1.0) {
            return Err(CliError::Config(format!(
                "key {key:?}: {value} must lie in (0, 1)"
            )));
        }
        Ok(value)
    }

    pub fn get_list_f64_or(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let value = match self.raw(key) {
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| Self::parse_value::<f64>(key, s))
                .collect::<Result<Vec<f64>, _>>()?,
            None => default.to_vec(),
        };
        if value.is_empty() {
            return Err(CliError::Config(format!("key {key:?}: list is empty")));
        }
        let rendered = value
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        self.record(key, rendered);
        Ok(value)
    }

    pub fn get_list_usize_or(
        &mut self,
        key: &str,
        default: &[usize],
    ) -> Result<Vec<usize>, CliError> {
        let value = match self.raw(key) {
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| Self::parse_value::<usize>(key, s))
                .collect::<Result<Vec<usize>, _>>()?,
            None => default.to_vec(),
        };
        if value.is_empty() {
            return Err(CliError::Config(format!("key {key:?}: list is empty")));
        }
        let rendered = value
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        self.record(key, rendered);
        Ok(value)
    }

    /// Reject keys nobody consumed, then hand back the resolved snapshot.
    pub fn finish(self) -> Result<BTreeMap<String, String>, CliError> {
        let unknown: Vec<&String> = self
            .values
            .keys()
            .filter(|k| !self.accessed.contains(*k))
            .collect();
        if !unknown.is_empty() {
            return Err(CliError::Config(format!(
                "unknown config keys: {}",
                unknown
                    .iter()
                    .map(|k| format!("{k:?}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
        Ok(self.resolved)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let mut cfg = Cfg::parse("# header\nalpha = 0.2\n\nseed = 7 # trailing\n").unwrap();
        assert_eq!(cfg.get_prob_or("alpha", 0.5).unwrap(), 0.2);
        assert_eq!(cfg.get_u64("seed").unwrap(), 7);
        cfg.finish().unwrap();
    }

    #[test]
    fn rejects_unknown_keys() {
        let cfg = Cfg::parse("mystery = 1\n").unwrap();
        assert!(matches!(cfg.finish(), Err(CliError::Config(_))));
    }

    #[test]
    fn rejects_duplicate_keys() {
        assert!(Cfg::parse("a = 1\na = 2\n").is_err());
    }

    #[test]
    fn probability_bounds_enforced() {
        let mut cfg = Cfg::parse("alpha = 1.0\n").unwrap();
        assert!(cfg.get_prob_or("alpha", 0.2).is_err());
    }

    #[test]
    fn snapshot_records_defaults() {
        let mut cfg = Cfg::parse("seed = 3\n").unwrap();
        let _ = cfg.get_u64("seed").unwrap();
        let _ = cfg.get_f64_or("gamma", 0.01).unwrap();
        let snapshot = cfg.finish().unwrap();
        assert_eq!(snapshot["gamma"], "0.01");
        assert_eq!(snapshot["seed"], "3");
    }

    #[test]
    fn snapshot_roundtrips_through_parse() {
        let mut cfg = Cfg::parse("seed = 3\nlevels = 0.7, 0.8,0.9\n").unwrap();
        let seed = cfg.get_u64("seed").unwrap();
        let levels = cfg.get_list_f64_or("levels", &[0.5]).unwrap();
        let snapshot = cfg.finish().unwrap();

        let text: String = snapshot
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        let mut reparsed = Cfg::parse(&text).unwrap();
        assert_eq!(reparsed.get_u64("seed").unwrap(), seed);
        assert_eq!(reparsed.get_list_f64_or("levels", &[0.5]).unwrap(), levels);
    }
}
