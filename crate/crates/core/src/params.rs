//! Flat `key = value` parameter files.
//!
//! Numbers are SI (seconds, amperes, farads, volts). Strings are quoted.
//! The format is a subset of TOML, so the `toml` crate does the parsing;
//! writing is done here to keep key order and number formatting fixed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::units::fmt12;

pub type ParamMap = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamFile {
    pub values: ParamMap,
    pub strings: BTreeMap<String, String>,
}

impl ParamFile {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Validation(format!("parameter file: {e}")))?;
        let mut out = ParamFile::default();
        for (key, value) in table {
            match value {
                toml::Value::Float(f) => {
                    out.values.insert(key, f);
                }
                toml::Value::Integer(i) => {
                    out.values.insert(key, i as f64);
                }
                toml::Value::String(s) => {
                    out.strings.insert(key, s);
                }
                other => {
                    return Err(Error::Validation(format!(
                        "parameter `{key}` must be a number or string, got {}",
                        other.type_str()
                    )))
                }
            }
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_text(&self, header: &[&str]) -> String {
        let mut s = String::new();
        for line in header {
            let _ = writeln!(s, "# {line}");
        }
        for (k, v) in &self.strings {
            let _ = writeln!(s, "{k} = {v:?}");
        }
        for (k, v) in &self.values {
            let mut num = fmt12(*v);
            if *v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e9) {
                let rounded: f64 = num.parse().unwrap_or(*v);
                num = format!("{rounded:e}");
            }
            if !num.contains(['.', 'e', 'E']) && v.is_finite() {
                num.push_str(".0");
            }
            let _ = writeln!(s, "{k} = {num}");
        }
        s
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}
