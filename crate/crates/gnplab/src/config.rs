//! Key-value experiment configuration files.
//!
//! The accepted format is one `key = value` pair per line, with `#` starting
//! a comment line and blank lines ignored. Keys are single tokens; values run
//! to the end of the line. Every experiment validates its key set, so a typo
//! fails loudly instead of silently falling back to a default.

use std::collections::BTreeMap;
use std::path::Path;

use crate::{Error, Result};

/// Which experiment a config file drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    LargestComponent,
    LowerBound,
    Duality,
    Sprinkle,
    TailWidth,
}

impl ExperimentKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "l1" => Ok(Self::LargestComponent),
            "lower-bound" => Ok(Self::LowerBound),
            "duality" => Ok(Self::Duality),
            "sprinkle" => Ok(Self::Sprinkle),
            "tail-width" => Ok(Self::TailWidth),
            other => Err(Error::Config(format!(
                "unknown experiment `{other}`; expected one of l1, lower-bound, duality, sprinkle, tail-width"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::LargestComponent => "l1",
            Self::LowerBound => "lower-bound",
            Self::Duality => "duality",
            Self::Sprinkle => "sprinkle",
            Self::TailWidth => "tail-width",
        }
    }
}

/// A parsed config file. Keys are unique; insertion order is irrelevant
/// because the map is sorted, which also keeps serialized echoes canonical.
#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {lineno}: expected `key = value`, got `{line}`"
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::Config(format!(
                    "line {lineno}: `{key}` is not a valid key"
                )));
            }
            if value.is_empty() {
                return Err(Error::Config(format!("line {lineno}: key `{key}` has no value")));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Config(format!("line {lineno}: duplicate key `{key}`")));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Rejects any key outside `allowed`, naming the offender.
    pub fn ensure_known_keys(&self, experiment: &str, allowed: &[&str]) -> Result<()> {
        for key in self.entries.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "unknown key `{key}` for experiment `{experiment}`; allowed keys: {}",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn req_str(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    pub fn req_u64(&self, key: &str) -> Result<u64> {
        parse_u64(key, self.req_str(key)?)
    }

    pub fn req_f64(&self, key: &str) -> Result<f64> {
        parse_f64(key, self.req_str(key)?)
    }

    pub fn opt_str<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    pub fn opt_u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            Some(v) => parse_u64(key, v),
            None => Ok(default),
        }
    }

    pub fn opt_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(v) => parse_f64(key, v),
            None => Ok(default),
        }
    }

    /// Comma-separated list of positive integers.
    pub fn req_u64_list(&self, key: &str) -> Result<Vec<u64>> {
        let raw = self.req_str(key)?;
        let mut out = Vec::new();
        for piece in raw.split(',') {
            out.push(parse_u64(key, piece.trim())?);
        }
        Ok(out)
    }

    /// Echo of the raw entries as a JSON object (keys already sorted).
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.entries
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect(),
        )
    }
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .parse::<u64>()
        .map_err(|_| Error::Config(format!("key `{key}`: `{value}` is not a non-negative integer")))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let parsed = value
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("key `{key}`: `{value}` is not a number")))?;
    if !parsed.is_finite() {
        return Err(Error::Config(format!("key `{key}`: `{value}` is not finite")));
    }
    Ok(parsed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_blanks_and_pairs() {
        let cfg = KvConfig::parse(
            "# sweep setup\n\nexperiment = l1\n  n_values = 1000, 2000 \nexponent=0.2\n",
        )
        .unwrap();
        assert_eq!(cfg.req_str("experiment").unwrap(), "l1");
        assert_eq!(cfg.req_u64_list("n_values").unwrap(), vec![1000, 2000]);
        assert_eq!(cfg.req_f64("exponent").unwrap(), 0.2);
    }

    #[test]
    fn rejects_malformed_lines() {
        for bad in ["just words", "= 3", "a b = 3", "key ="] {
            let err = KvConfig::parse(bad).unwrap_err().to_string();
            assert!(err.contains("line 1"), "{bad}: {err}");
        }
        let err = KvConfig::parse("a = 1\na = 2\n").unwrap_err().to_string();
        assert!(err.contains("duplicate key `a`"));
    }

    #[test]
    fn typed_getters_name_the_key() {
        let cfg = KvConfig::parse("count = seven\nrate = fast\n").unwrap();
        let err = cfg.req_u64("count").unwrap_err().to_string();
        assert!(err.contains("`count`") && err.contains("seven"));
        let err = cfg.req_f64("rate").unwrap_err().to_string();
        assert!(err.contains("`rate`"));
        let err = cfg.req_str("absent").unwrap_err().to_string();
        assert!(err.contains("`absent`"));
        assert_eq!(cfg.opt_u64("absent", 9).unwrap(), 9);
        assert_eq!(cfg.opt_f64("absent", 0.5).unwrap(), 0.5);
        assert_eq!(cfg.opt_str("absent", "x"), "x");
    }

    #[test]
    fn unknown_keys_are_rejected_by_whitelist() {
        let cfg = KvConfig::parse("experiment = l1\nreplicas = 3\n").unwrap();
        let err = cfg
            .ensure_known_keys("l1", &["experiment", "replicates"])
            .unwrap_err()
            .to_string();
        assert!(err.contains("unknown key `replicas`"));
        assert!(err.contains("replicates"));
    }

    #[test]
    fn experiment_kinds_round_trip() {
        for name in ["l1", "lower-bound", "duality", "sprinkle", "tail-width"] {
            assert_eq!(ExperimentKind::parse(name).unwrap().name(), name);
        }
        assert!(ExperimentKind::parse("L1").is_err());
    }

    #[test]
    fn json_echo_is_sorted() {
        let cfg = KvConfig::parse("zeta = 1\nalpha = 2\n").unwrap();
        assert_eq!(cfg.to_json().to_string(), r#"{"alpha":"2","zeta":"1"}"#);
    }
}
