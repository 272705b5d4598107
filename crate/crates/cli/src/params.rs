use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Fully resolved string-valued parameters of one subcommand.
///
/// Values stay as text so the manifest can echo them verbatim; typed access
/// goes through the getters, which report the offending key on failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Params {
    map: BTreeMap<String, String>,
}

impl Params {
    pub fn new(map: BTreeMap<String, String>) -> Self {
        Self { map }
    }

    pub fn map(&self) -> &BTreeMap<String, String> {
        &self.map
    }

    pub fn str(&self, key: &str) -> CliResult<&str> {
        self.map
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| CliError::Config(format!("missing parameter `{key}`")))
    }

    pub fn parse<T: FromStr>(&self, key: &str, what: &str) -> CliResult<T> {
        let raw = self.str(key)?;
        raw.trim()
            .parse()
            .map_err(|_| CliError::Config(format!("`{key} = {raw}`: expected {what}")))
    }

    pub fn usize(&self, key: &str) -> CliResult<usize> {
        self.parse(key, "a nonnegative integer")
    }

    pub fn u64(&self, key: &str) -> CliResult<u64> {
        self.parse(key, "a nonnegative integer")
    }

    pub fn f64(&self, key: &str) -> CliResult<f64> {
        let v: f64 = self.parse(key, "a number")?;
        if !v.is_finite() {
            return Err(CliError::Config(format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    pub fn bool(&self, key: &str) -> CliResult<bool> {
        match self.str(key)?.trim() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(CliError::Config(format!("`{key} = {other}`: expected true or false"))),
        }
    }

    pub fn f64_list(&self, key: &str) -> CliResult<Vec<f64>> {
        let raw = self.str(key)?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::Config(format!("`{key} = {raw}`: expected comma-separated numbers")))
            })
            .collect()
    }

    pub fn choice<'a>(&'a self, key: &str, allowed: &[&str]) -> CliResult<&'a str> {
        let v = self.str(key)?.trim();
        if allowed.contains(&v) {
            Ok(v)
        } else {
            Err(CliError::Config(format!("`{key} = {v}`: expected one of {}", allowed.join(", "))))
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str, origin: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = parse_assignment(line)
            .map_err(|e| CliError::Config(format!("{origin}:{}: {e}", no + 1)))?;
        out.push((k, v));
    }
    Ok(out)
}

pub fn parse_assignment(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected `key = value`, got `{s}`"))?;
    let k = k.trim();
    if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(format!("invalid key `{k}`"));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_with_comments() {
        let kv = parse_config_text("# header\nn = 5\n\nk=2 # trailing\n", "cfg").unwrap();
        assert_eq!(kv, vec![("n".into(), "5".into()), ("k".into(), "2".into())]);
    }

    #[test]
    fn bad_line_reports_position() {
        let err = parse_config_text("n = 5\nbogus\n", "cfg").unwrap_err();
        assert!(err.to_string().contains("cfg:2"), "{err}");
    }

    #[test]
    fn typed_getters() {
        let p = Params::new([("a".to_string(), "3, 5".to_string()), ("b".to_string(), "x".to_string())].into());
        assert_eq!(p.f64_list("a").unwrap(), vec![3.0, 5.0]);
        assert!(matches!(p.usize("b"), Err(CliError::Config(_))));
        assert!(p.choice("b", &["y"]).is_err());
    }
}
