//! Flat `key=value` experiment configuration files: `#` starts a comment
//! line, keys are unique, values are typed on extraction. The format
//! round-trips exactly, which the fuzz harness leans on.

use crate::error::{Error, Result};

/// Parsed configuration: ordered key-value pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pairs: Vec<(String, String)>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '-')
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse(format!(
                    "config line {}: expected key=value, got {line:?}",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if !valid_key(key) {
                return Err(Error::Parse(format!(
                    "config line {}: bad key {key:?}",
                    lineno + 1
                )));
            }
            if value.is_empty() {
                return Err(Error::Parse(format!(
                    "config line {}: empty value for {key}",
                    lineno + 1
                )));
            }
            if pairs.iter().any(|(k, _)| k == key) {
                return Err(Error::Parse(format!(
                    "config line {}: duplicate key {key}",
                    lineno + 1
                )));
            }
            pairs.push((key.to_string(), value.to_string()));
        }
        Ok(Config { pairs })
    }

    /// Canonical text form; parsing it reproduces the same pairs.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.pairs {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::InvalidParam(format!("config is missing key {key}")))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| Error::Parse(format!("key {key}: expected a number, got {v:?}"))),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.get_f64(key)?
            .ok_or_else(|| Error::InvalidParam(format!("config is missing key {key}")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.get_f64(key)?.unwrap_or(default))
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| Error::Parse(format!("key {key}: expected an integer, got {v:?}"))),
        }
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        self.get_usize(key)?
            .ok_or_else(|| Error::InvalidParam(format!("config is missing key {key}")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.get_usize(key)?.unwrap_or(default))
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| Error::Parse(format!("key {key}: expected an integer, got {v:?}"))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.get_u64(key)?.unwrap_or(default))
    }

    pub fn require_u64(&self, key: &str) -> Result<u64> {
        self.get_u64(key)?
            .ok_or_else(|| Error::InvalidParam(format!("config is missing key {key}")))
    }

    /// Comma-separated list of nonnegative integers.
    pub fn require_usize_list(&self, key: &str) -> Result<Vec<usize>> {
        let raw = self.require(key)?;
        let mut out = Vec::new();
        for part in raw.split(',') {
            let part = part.trim();
            let v: usize = part.parse().map_err(|_| {
                Error::Parse(format!("key {key}: expected an integer list, got {part:?}"))
            })?;
            out.push(v);
        }
        if out.is_empty() {
            return Err(Error::Parse(format!("key {key}: empty list")));
        }
        Ok(out)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(Error::Parse(format!(
                "key {key}: expected true or false, got {v:?}"
            ))),
        }
    }

    /// Comma-separated list of numbers, e.g. `r_list=4,8,16`.
    pub fn require_f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.require(key)?;
        let mut out = Vec::new();
        for part in raw.split(',') {
            let part = part.trim();
            let v: f64 = part
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| {
                    Error::Parse(format!("key {key}: expected a number list, got {part:?}"))
                })?;
            out.push(v);
        }
        if out.is_empty() {
            return Err(Error::Parse(format!("key {key}: empty list")));
        }
        Ok(out)
    }

    /// A strictly increasing list of scales with at least two entries, the
    /// shape every fitted sweep needs.
    pub fn require_scale_list(&self, key: &str) -> Result<Vec<f64>> {
        let list = self.require_f64_list(key)?;
        if list.len() < 2 {
            return Err(Error::InvalidParam(format!(
                "key {key}: a sweep needs at least 2 scales"
            )));
        }
        for w in list.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParam(format!(
                    "key {key}: scales must be strictly increasing"
                )));
            }
        }
        if list.iter().any(|&r| !(r >= 1.0)) {
            return Err(Error::InvalidParam(format!("key {key}: scales must be >= 1")));
        }
        Ok(list)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let cfg = Config::parse("# heading\n\n q = 4.0 \nr_list=2,4, 8\nname=x_quarter\n").unwrap();
        assert_eq!(cfg.len(), 3);
        assert_eq!(cfg.require_f64("q").unwrap(), 4.0);
        assert_eq!(cfg.require_scale_list("r_list").unwrap(), vec![2.0, 4.0, 8.0]);
        assert_eq!(cfg.require("name").unwrap(), "x_quarter");
        assert!(cfg.get("absent").is_none());
        assert_eq!(cfg.f64_or("absent", 1.5).unwrap(), 1.5);
    }

    #[test]
    fn round_trips() {
        let text = "a=1\nb = two words \n# note\nc.d-e_f=3,4\n";
        let cfg = Config::parse(text).unwrap();
        let re = Config::parse(&cfg.serialize()).unwrap();
        assert_eq!(cfg, re);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("just a line\n").is_err());
        assert!(Config::parse("=value\n").is_err());
        assert!(Config::parse("key=\n").is_err());
        assert!(Config::parse("a=1\na=2\n").is_err());
        assert!(Config::parse("bad key=1\n").is_err());
    }

    #[test]
    fn typed_extraction_errors() {
        let cfg = Config::parse("q=abc\nlist=1,x\nflag=maybe\nr=4,2\none=4\n").unwrap();
        assert!(cfg.get_f64("q").is_err());
        assert!(cfg.require_f64_list("list").is_err());
        assert!(cfg.bool_or("flag", true).is_err());
        assert!(cfg.require_scale_list("r").is_err());
        assert!(cfg.require_scale_list("one").is_err());
        assert!(cfg.require("missing").is_err());
    }

    #[test]
    fn rejects_non_finite_numbers() {
        let cfg = Config::parse("q=inf\nr=1,nan\n").unwrap();
        assert!(cfg.get_f64("q").is_err());
        assert!(cfg.require_f64_list("r").is_err());
    }
}
