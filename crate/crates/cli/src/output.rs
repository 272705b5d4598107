use std::fmt::Display;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    /// Parses a comma list such as `csv,json`.
    pub fn parse_list(s: &str) -> CliResult<Vec<Format>> {
        let mut out = Vec::new();
        for part in s.split(',') {
            let f = match part.trim() {
                "csv" => Format::Csv,
                "json" => Format::Json,
                other => return Err(CliError::Config(format!("unknown format `{other}`; expected csv or json"))),
            };
            if !out.contains(&f) {
                out.push(f);
            }
        }
        out.sort();
        Ok(out)
    }
}

/// One output file, rendered in memory before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub format: Format,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn json<T: Serialize>(name: &str, value: &T) -> CliResult<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Self { name: name.to_string(), format: Format::Json, bytes })
    }

    pub fn csv(name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        Ok(Self { name: name.to_string(), format: Format::Csv, bytes })
    }
}

/// Shortest round-trip decimal text; `Display` for floats is locale-free.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn cell<T: Display>(v: T) -> String {
    v.to_string()
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    for a in artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}
