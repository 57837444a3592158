//! Dataset files and result artifacts.
//!
//! A dataset is a CSV file with one plasticity measurement per row. Timing
//! columns are in milliseconds and left empty when the protocol does not use
//! them. A `# dataset: <name>` comment names the set; other `#` lines are
//! provenance notes.
//!
//! ```text
//! # dataset: visual_cortex
//! label,variant,dt_ms,dt1_ms,dt2_ms,t_ms,rho_hz,reps,dw_exp,sem,source
//! vc_plus10_0.1hz,pairing,10,,,,0.1,60,-0.04,0.05,PG06-T1
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuit::{TrajectorySample, NODE_NAMES};
use crate::error::{Error, Result};
use crate::protocols::{ProtocolKind, ProtocolSpec, DEFAULT_REPS, DEFAULT_RHO};
use crate::svg::{BarGroup, BarPlot, LinePlot, Series};
use crate::units::fmt12;

pub const VISUAL_CORTEX: &str = "visual_cortex";
pub const HIPPOCAMPAL: &str = "hippocampal";

pub const DATASET_HEADER: [&str; 11] = [
    "label", "variant", "dt_ms", "dt1_ms", "dt2_ms", "t_ms", "rho_hz", "reps", "dw_exp", "sem", "source",
];

const MS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub protocol: ProtocolSpec,
    /// Fractional weight change (0.1 = +10%).
    pub dw_exp: f64,
    /// Standard error of the mean of `dw_exp`.
    pub sem: f64,
    pub label: String,
    /// Provenance tag of the transcribed value.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub points: Vec<DataPoint>,
}

/// Number of points a named dataset must have.
pub fn expected_len(name: &str) -> Option<usize> {
    match name {
        VISUAL_CORTEX => Some(10),
        HIPPOCAMPAL => Some(13),
        _ => None,
    }
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Validation(format!("dataset `{}` has no points", self.name)));
        }
        if let Some(n) = expected_len(&self.name) {
            if self.points.len() != n {
                return Err(Error::Validation(format!(
                    "dataset `{}` must have {n} points, found {}",
                    self.name,
                    self.points.len()
                )));
            }
        }
        for (i, p) in self.points.iter().enumerate() {
            if !(p.sem > 0.0) || !p.sem.is_finite() {
                return Err(Error::Validation(format!("point {} (`{}`): sem must be > 0", i + 1, p.label)));
            }
            if !p.dw_exp.is_finite() {
                return Err(Error::Validation(format!("point {} (`{}`): dw_exp not finite", i + 1, p.label)));
            }
            p.protocol.validate().map_err(|e| Error::Point {
                label: p.label.clone(),
                source: Box::new(e),
            })?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn field(rec: &csv::StringRecord, idx: usize) -> Option<&str> {
    rec.get(idx).map(str::trim).filter(|s| !s.is_empty())
}

fn num(rec: &csv::StringRecord, idx: usize, row: usize) -> Result<Option<f64>> {
    match field(rec, idx) {
        None => Ok(None),
        Some(s) => s.parse::<f64>().map(Some).map_err(|_| Error::Parse {
            row,
            field: DATASET_HEADER[idx].to_string(),
            msg: format!("`{s}` is not a number"),
        }),
    }
}

fn required(rec: &csv::StringRecord, idx: usize, row: usize) -> Result<f64> {
    num(rec, idx, row)?.ok_or_else(|| Error::Parse {
        row,
        field: DATASET_HEADER[idx].to_string(),
        msg: "missing value".into(),
    })
}

fn parse_row(rec: &csv::StringRecord, row: usize) -> Result<DataPoint> {
    let bad = |idx: usize, msg: String| Error::Parse {
        row,
        field: DATASET_HEADER[idx].to_string(),
        msg,
    };
    let label = field(rec, 0).unwrap_or_default().to_string();
    let variant = field(rec, 1).ok_or_else(|| bad(1, "missing value".into()))?;
    let kind = ProtocolKind::parse(variant).ok_or_else(|| bad(1, format!("unknown variant `{variant}`")))?;
    let rho = num(rec, 6, row)?.unwrap_or(DEFAULT_RHO);
    let reps = match field(rec, 7) {
        None => DEFAULT_REPS,
        Some(s) => s.parse::<usize>().map_err(|_| bad(7, format!("`{s}` is not a count")))?,
    };
    let protocol = match kind {
        ProtocolKind::Pairing => ProtocolSpec::Pairing {
            dt: required(rec, 2, row)? * MS,
            rho,
            reps,
        },
        ProtocolKind::PrePostPre => ProtocolSpec::TripletPrePostPre {
            dt1: required(rec, 3, row)? * MS,
            dt2: required(rec, 4, row)? * MS,
            rho,
            reps,
        },
        ProtocolKind::PostPrePost => ProtocolSpec::TripletPostPrePost {
            dt1: required(rec, 3, row)? * MS,
            dt2: required(rec, 4, row)? * MS,
            rho,
            reps,
        },
        ProtocolKind::Quadruplet => {
            let dt1 = required(rec, 3, row)?;
            let dt2 = required(rec, 4, row)?;
            if dt1 != -dt2 {
                return Err(bad(
                    3,
                    format!("quadruplet requires dt = -dt1 = dt2, got dt1={dt1}, dt2={dt2}"),
                ));
            }
            ProtocolSpec::Quadruplet {
                dt: dt2 * MS,
                t_sep: required(rec, 5, row)? * MS,
                rho,
                reps,
            }
        }
    };
    protocol.validate().map_err(|e| bad(1, e.to_string()))?;
    let dw_exp = required(rec, 8, row)?;
    let sem = required(rec, 9, row)?;
    if !(sem > 0.0) {
        return Err(bad(9, format!("sem must be > 0, got {sem}")));
    }
    Ok(DataPoint {
        protocol,
        dw_exp,
        sem,
        label,
        source: field(rec, 10).unwrap_or_default().to_string(),
    })
}

/// Parses dataset text; `fallback_name` is used when no `# dataset:` line exists.
pub fn parse_dataset(text: &str, fallback_name: &str) -> Result<Dataset> {
    let name = text
        .lines()
        .filter_map(|l| l.trim().strip_prefix('#'))
        .find_map(|l| l.trim().strip_prefix("dataset:"))
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| fallback_name.to_string());
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let has_header = !header.is_empty();
    if has_header {
        for (i, h) in DATASET_HEADER.iter().enumerate() {
            if header.get(i) != Some(*h) {
                return Err(Error::Parse {
                    row: 0,
                    field: h.to_string(),
                    msg: format!("expected column {} to be `{h}`", i + 1),
                });
            }
        }
    }
    let mut points = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        points.push(parse_row(&rec, i + 1)?);
    }
    let ds = Dataset { name, points };
    ds.validate()?;
    Ok(ds)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    parse_dataset(&text, stem)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt12).unwrap_or_default()
}

/// Serializes a dataset in the file format read by [`parse_dataset`].
pub fn dataset_to_csv(ds: &Dataset, notes: &[&str]) -> String {
    let mut s = format!("# dataset: {}\n", ds.name);
    for n in notes {
        let _ = writeln!(s, "# {n}");
    }
    s.push_str(&DATASET_HEADER.join(","));
    s.push('\n');
    for p in &ds.points {
        let (dt, dt1, dt2, t) = match p.protocol {
            ProtocolSpec::Pairing { dt, .. } => (Some(dt), None, None, None),
            ProtocolSpec::TripletPrePostPre { dt1, dt2, .. } | ProtocolSpec::TripletPostPrePost { dt1, dt2, .. } => {
                (None, Some(dt1), Some(dt2), None)
            }
            ProtocolSpec::Quadruplet { dt, t_sep, .. } => (None, Some(-dt), Some(dt), Some(t_sep)),
        };
        let ms = |v: Option<f64>| opt(v.map(|x| x / MS));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            p.label,
            p.protocol.kind().name(),
            ms(dt),
            ms(dt1),
            ms(dt2),
            ms(t),
            fmt12(p.protocol.rho()),
            p.protocol.reps(),
            fmt12(p.dw_exp),
            fmt12(p.sem),
            p.source
        );
    }
    s
}

pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    write_file(path, &dataset_to_csv(ds, &[]))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::File {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

/// CSV text with every number at 12 significant digits.
pub fn csv_table<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt12).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Model output next to the measurement it is compared with.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub point: DataPoint,
    pub dw_model: f64,
}

impl PointResult {
    /// Squared normalized residual of this point.
    pub fn contribution(&self) -> f64 {
        ((self.point.dw_exp - self.dw_model) / self.point.sem).powi(2)
    }
}

/// Per-protocol panel table.
pub fn panel_csv(kind: ProtocolKind, rows: &[&PointResult]) -> String {
    match kind {
        ProtocolKind::Pairing => csv_table(
            &["rho_hz", "dt_ms", "dw_model", "dw_exp", "sem"],
            rows.iter().map(|r| match r.point.protocol {
                ProtocolSpec::Pairing { dt, rho, .. } => {
                    vec![rho, dt / MS, r.dw_model, r.point.dw_exp, r.point.sem]
                }
                _ => unreachable!("pairing panel with non-pairing row"),
            }),
        ),
        ProtocolKind::Quadruplet => csv_table(
            &["t_ms", "dw_model", "dw_exp", "sem"],
            rows.iter().map(|r| match r.point.protocol {
                ProtocolSpec::Quadruplet { t_sep, .. } => vec![t_sep / MS, r.dw_model, r.point.dw_exp, r.point.sem],
                _ => unreachable!("quadruplet panel with non-quadruplet row"),
            }),
        ),
        ProtocolKind::PrePostPre | ProtocolKind::PostPrePost => csv_table(
            &["dt1_ms", "dt2_ms", "dw_model", "dw_exp", "sem"],
            rows.iter().map(|r| match r.point.protocol {
                ProtocolSpec::TripletPrePostPre { dt1, dt2, .. } | ProtocolSpec::TripletPostPrePost { dt1, dt2, .. } => {
                    vec![dt1 / MS, dt2 / MS, r.dw_model, r.point.dw_exp, r.point.sem]
                }
                _ => unreachable!("triplet panel with non-triplet row"),
            }),
        ),
    }
}

/// Plot of one panel: Δw vs ρ, Δw vs T, or bar pairs per (Δt1, Δt2).
pub fn panel_svg(kind: ProtocolKind, rows: &[&PointResult], title: &str) -> String {
    match kind {
        ProtocolKind::Pairing => {
            let mut dts: Vec<f64> = rows
                .iter()
                .filter_map(|r| match r.point.protocol {
                    ProtocolSpec::Pairing { dt, .. } => Some(dt),
                    _ => None,
                })
                .collect();
            dts.sort_by(f64::total_cmp);
            dts.dedup();
            let mut plot = LinePlot::new(title, "rho (Hz)", "dw");
            for dt in dts {
                let mut sel: Vec<(f64, f64, f64, f64)> = rows
                    .iter()
                    .filter_map(|r| match r.point.protocol {
                        ProtocolSpec::Pairing { dt: d, rho, .. } if d == dt => {
                            Some((rho, r.dw_model, r.point.dw_exp, r.point.sem))
                        }
                        _ => None,
                    })
                    .collect();
                sel.sort_by(|a, b| a.0.total_cmp(&b.0));
                let name = format!("dt={} ms", fmt12(dt / MS));
                plot.push(Series::line(&format!("model {name}"), sel.iter().map(|s| (s.0, s.1)).collect()));
                plot.push(Series::markers(
                    &format!("data {name}"),
                    sel.iter().map(|s| (s.0, s.2)).collect(),
                    Some(sel.iter().map(|s| s.3).collect()),
                ));
            }
            plot.render()
        }
        ProtocolKind::Quadruplet => {
            let mut sel: Vec<(f64, f64, f64, f64)> = rows
                .iter()
                .filter_map(|r| match r.point.protocol {
                    ProtocolSpec::Quadruplet { t_sep, .. } => Some((t_sep / MS, r.dw_model, r.point.dw_exp, r.point.sem)),
                    _ => None,
                })
                .collect();
            sel.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut plot = LinePlot::new(title, "T (ms)", "dw");
            plot.push(Series::line("model", sel.iter().map(|s| (s.0, s.1)).collect()));
            plot.push(Series::markers(
                "data",
                sel.iter().map(|s| (s.0, s.2)).collect(),
                Some(sel.iter().map(|s| s.3).collect()),
            ));
            plot.render()
        }
        ProtocolKind::PrePostPre | ProtocolKind::PostPrePost => {
            let groups = rows
                .iter()
                .filter_map(|r| match r.point.protocol {
                    ProtocolSpec::TripletPrePostPre { dt1, dt2, .. }
                    | ProtocolSpec::TripletPostPrePost { dt1, dt2, .. } => Some(BarGroup {
                        label: format!("({},{})", fmt12(dt1 / MS), fmt12(dt2 / MS)),
                        model: r.dw_model,
                        data: r.point.dw_exp,
                        err: r.point.sem,
                    }),
                    _ => None,
                })
                .collect();
            BarPlot {
                title: title.to_string(),
                ylabel: "dw".into(),
                groups,
            }
            .render()
        }
    }
}

/// Writes one CSV + SVG pair per protocol kind present in `results`.
///
/// Files are named `<stem>_<kind>.csv|svg`; returns the paths written.
pub fn write_results(dir: &Path, stem: &str, results: &[PointResult]) -> Result<Vec<PathBuf>> {
    if results.is_empty() {
        return Err(Error::Validation("no results to write".into()));
    }
    let mut kinds: Vec<ProtocolKind> = results.iter().map(|r| r.point.protocol.kind()).collect();
    kinds.sort();
    kinds.dedup();
    let mut written = Vec::new();
    for kind in kinds {
        let rows: Vec<&PointResult> = results.iter().filter(|r| r.point.protocol.kind() == kind).collect();
        let csv_path = dir.join(format!("{stem}_{}.csv", kind.name()));
        write_file(&csv_path, &panel_csv(kind, &rows))?;
        let svg_path = dir.join(format!("{stem}_{}.svg", kind.name()));
        write_file(&svg_path, &panel_svg(kind, &rows, &format!("{stem} {}", kind.name())))?;
        written.push(csv_path);
        written.push(svg_path);
    }
    Ok(written)
}

/// Per-point residual table.
pub fn residuals_csv(results: &[PointResult]) -> String {
    let mut s = String::from("label,variant,dw_model,dw_exp,sem,contribution\n");
    for r in results {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.point.label,
            r.point.protocol.kind().name(),
            fmt12(r.dw_model),
            fmt12(r.point.dw_exp),
            fmt12(r.point.sem),
            fmt12(r.contribution())
        );
    }
    s
}

/// Trajectory export: time, weight voltage and one column per internal node.
pub fn trajectory_csv(samples: &[TrajectorySample]) -> String {
    let mut header = vec!["t_seconds", "v_w_volts"];
    header.extend(NODE_NAMES);
    csv_table(
        &header,
        samples.iter().map(|s| {
            let mut row = vec![s.t, s.v_w];
            row.extend(s.nodes);
            row
        }),
    )
}
