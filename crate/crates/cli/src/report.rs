use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub input: Option<String>,
    pub out: Option<String>,
    pub format: Format,
    pub seed: u64,
    pub seed_schedule: &'static str,
    /// Node budget of every exhaustive search.
    pub budget: u64,
    pub workers: Option<usize>,
    pub precision_bits: u32,
    pub params: Map<String, Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub result: Value,
}

impl Report {
    pub fn render(&self, format: Format) -> Result<String, CliError> {
        let value = serde_json::to_value(self).expect("reports serialize");
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(&value).expect("reports serialize") + "\n"),
            Format::Csv => to_csv(&value),
        }
    }
}

/// Flattens a JSON value into `(dotted.path, scalar)` pairs in document order.
/// Array elements use their index as the path component; empty containers
/// keep a row of their own.
pub fn flatten(value: &Value) -> Vec<(String, String)> {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        let join = |key: &str| {
            if prefix.is_empty() {
                key.to_string()
            } else {
                format!("{prefix}.{key}")
            }
        };
        match v {
            Value::Object(m) if !m.is_empty() => m.iter().for_each(|(k, x)| walk(&join(k), x, out)),
            Value::Array(a) if !a.is_empty() => a
                .iter()
                .enumerate()
                .for_each(|(i, x)| walk(&join(&i.to_string()), x, out)),
            Value::Object(_) => out.push((prefix.to_string(), "{}".into())),
            Value::Array(_) => out.push((prefix.to_string(), "[]".into())),
            Value::Null => out.push((prefix.to_string(), String::new())),
            Value::String(s) => out.push((prefix.to_string(), s.clone())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut out = Vec::new();
    walk("", value, &mut out);
    out
}

fn to_csv(value: &Value) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(format!("writing CSV: {e}"));
    w.write_record(["field", "value"]).map_err(io)?;
    for (field, v) in flatten(value) {
        w.write_record([field, v]).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(format!("writing CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields is UTF-8"))
}

/// Writes to `out`, which must not exist yet, or to stdout.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("writing stdout: {e}"))),
        Some(path) => {
            let mut f = OpenOptions::new()
                .write(true)
                .create_new(true)
                .open(path)
                .map_err(|e| {
                    if e.kind() == io::ErrorKind::AlreadyExists {
                        CliError::Invalid(format!("refusing to overwrite existing {}", path.display()))
                    } else {
                        CliError::Io(format!("creating {}: {e}", path.display()))
                    }
                })?;
            f.write_all(text.as_bytes())
                .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
        }
    }
}
