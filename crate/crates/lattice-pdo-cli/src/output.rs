//! Artifact writing: every run produces one JSON or CSV file under the
//! output directory, written atomically (temp file then rename) and, for
//! JSON, carrying the full run configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::process;

use lattice_pdo::report::wrap_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (expected json or csv)")),
        }
    }
}

pub fn atomic_write(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension(format!("tmp-{}", process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Flatten a JSON value into `key,value` CSV rows; arrays of uniform
/// objects become a header row plus one row per element.
pub fn json_to_csv(value: &serde_json::Value) -> String {
    let mut rows = vec!["key,value".to_string()];
    flatten("", value, &mut rows);
    rows.join("\n") + "\n"
}

fn flatten(prefix: &str, value: &serde_json::Value, rows: &mut Vec<String>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, rows);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, rows);
            }
        }
        other => rows.push(format!("{prefix},{other}")),
    }
}

pub struct Artifact {
    pub kind: String,
    pub payload: serde_json::Value,
    /// Prebuilt CSV rows when the report has a natural tabular form.
    pub csv: Option<Vec<String>>,
}

impl Artifact {
    pub fn new(kind: &str, payload: serde_json::Value) -> Self {
        Self { kind: kind.to_string(), payload, csv: None }
    }

    pub fn with_csv(mut self, rows: Vec<String>) -> Self {
        self.csv = Some(rows);
        self
    }

    pub fn write(
        &self,
        out_dir: &Path,
        format: Format,
        config: &serde_json::Value,
    ) -> std::io::Result<PathBuf> {
        let path = match format {
            Format::Json => {
                let wrapped = wrap_json(&self.kind, config.clone(), self.payload.clone());
                let path = out_dir.join(format!("{}.json", self.kind));
                atomic_write(&path, &(serde_json::to_string_pretty(&wrapped).unwrap() + "\n"))?;
                path
            }
            Format::Csv => {
                let contents = match &self.csv {
                    Some(rows) => rows.join("\n") + "\n",
                    None => json_to_csv(&self.payload),
                };
                let path = out_dir.join(format!("{}.csv", self.kind));
                atomic_write(&path, &contents)?;
                path
            }
        };
        Ok(path)
    }
}

/// A named pass/fail condition; any failure turns the exit code to 2.
pub struct Certificate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Certificate {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), passed, detail: detail.into() }
    }

    pub fn print(&self) {
        let status = if self.passed { "PASS" } else { "FAIL" };
        println!("CERT {}: {} ({})", self.name, status, self.detail);
    }
}
