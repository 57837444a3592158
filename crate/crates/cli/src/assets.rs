//! Datasets and parameter files compiled into the binary.

use std::path::{Path, PathBuf};

use tstdp_core::data_io::{load_dataset, parse_dataset, Dataset};
use tstdp_core::params::ParamFile;

use crate::CliError;

pub const DATASETS: [(&str, &str); 2] = [
    ("visual_cortex", include_str!("../../../data/visual_cortex.csv")),
    ("hippocampal", include_str!("../../../data/hippocampal.csv")),
];

pub const PARAMS: [(&str, &str); 12] = [
    ("table1_row1", include_str!("../../../data/params/table1_row1.kv")),
    ("table1_row2", include_str!("../../../data/params/table1_row2.kv")),
    ("table2", include_str!("../../../data/params/table2.kv")),
    ("table3", include_str!("../../../data/params/table3.kv")),
    ("fit_circuit_pair_vc", include_str!("../../../data/params/fit_circuit_pair_vc.kv")),
    ("fit_circuit_pair_hc", include_str!("../../../data/params/fit_circuit_pair_hc.kv")),
    ("fit_circuit_minimal_vc", include_str!("../../../data/params/fit_circuit_minimal_vc.kv")),
    ("fit_circuit_minimal_hc", include_str!("../../../data/params/fit_circuit_minimal_hc.kv")),
    ("fit_ideal_pair_vc", include_str!("../../../data/params/fit_ideal_pair_vc.kv")),
    ("fit_ideal_pair_hc", include_str!("../../../data/params/fit_ideal_pair_hc.kv")),
    ("fit_ideal_minimal_vc", include_str!("../../../data/params/fit_ideal_minimal_vc.kv")),
    ("fit_ideal_minimal_hc", include_str!("../../../data/params/fit_ideal_minimal_hc.kv")),
];

fn bundled_key(arg: &str) -> String {
    arg.trim_end_matches(".csv").trim_end_matches(".kv").replace('-', "_")
}

/// Dataset by path, by name inside `data_dir`, or by bundled name.
pub fn dataset(arg: &str, data_dir: Option<&Path>) -> Result<Dataset, CliError> {
    let path = Path::new(arg);
    if path.exists() {
        return load_dataset(path).map_err(CliError::input);
    }
    let key = bundled_key(arg);
    if let Some(dir) = data_dir {
        let candidate = dir.join(format!("{key}.csv"));
        if candidate.exists() {
            return load_dataset(&candidate).map_err(CliError::input);
        }
    }
    match DATASETS.iter().find(|(name, _)| *name == key) {
        Some((name, text)) => parse_dataset(text, name).map_err(CliError::input),
        None => Err(CliError::Validation(format!(
            "dataset `{arg}` not found (bundled: {})",
            DATASETS.map(|d| d.0).join(", ")
        ))),
    }
}

/// Parameter file by path, by name inside `data_dir/params`, or by bundled name.
pub fn params(arg: &str, data_dir: Option<&Path>) -> Result<ParamFile, CliError> {
    let path = Path::new(arg);
    if path.exists() {
        return ParamFile::load(path).map_err(CliError::input);
    }
    let key = bundled_key(arg);
    if let Some(dir) = data_dir {
        let candidate: PathBuf = dir.join("params").join(format!("{key}.kv"));
        if candidate.exists() {
            return ParamFile::load(&candidate).map_err(CliError::input);
        }
    }
    match PARAMS.iter().find(|(name, _)| *name == key) {
        Some((_, text)) => ParamFile::parse(text).map_err(CliError::input),
        None => Err(CliError::Validation(format!(
            "parameter file `{arg}` not found (bundled: {})",
            PARAMS.map(|p| p.0).join(", ")
        ))),
    }
}
