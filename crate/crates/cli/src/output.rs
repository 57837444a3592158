//! Tabular output in CSV or JSON.

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use tstdp_core::data_io::write_file;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Converts CSV text (no quoting, `#` comments skipped) to an array of objects.
pub fn csv_to_json(text: &str) -> Value {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
    let Some(header) = lines.next() else {
        return Value::Array(Vec::new());
    };
    let keys: Vec<&str> = header.split(',').collect();
    let rows = lines
        .map(|line| {
            let mut obj = Map::new();
            for (k, cell) in keys.iter().zip(line.split(',')) {
                let v = if cell.is_empty() {
                    Value::Null
                } else {
                    match cell.parse::<f64>() {
                        Ok(x) if x.is_finite() => serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number),
                        _ => Value::String(cell.to_string()),
                    }
                };
                obj.insert(k.to_string(), v);
            }
            Value::Object(obj)
        })
        .collect();
    Value::Array(rows)
}

/// Prints `csv` to stdout in the requested format.
pub fn emit(format: Format, csv: &str) {
    match format {
        Format::Csv => print!("{csv}"),
        Format::Json => println!("{}", serde_json::to_string_pretty(&csv_to_json(csv)).expect("json")),
    }
}

pub fn emit_value(format: Format, csv: &str, json: Value) {
    match format {
        Format::Csv => print!("{csv}"),
        Format::Json => println!("{}", serde_json::to_string_pretty(&json).expect("json")),
    }
}

/// Writes `contents` to `dir/name` and returns the path.
pub fn save(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    write_file(&path, contents).map_err(CliError::output)?;
    Ok(path)
}
