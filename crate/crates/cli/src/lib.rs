//! Command-line front end: learning windows, fits, protocol runs and the
//! figure/table reproduction sets.

pub mod assets;
pub mod output;
mod reproduce;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use tstdp_core::circuit::{
    fit_lobe, simulate_circuit, stdp_window, CircuitParams, CircuitTopology, LobeSide,
};
use tstdp_core::data_io::{residuals_csv, trajectory_csv, write_results, csv_table};
use tstdp_core::fitting::{self, default_bound, FitProblem, FreeParam, ModelKind};
use tstdp_core::params::{ParamFile, ParamMap};
use tstdp_core::protocols::{build_trains, ProtocolSpec, DEFAULT_REPS, DEFAULT_RHO};
use tstdp_core::rules::{
    pair_delta_w, run_pair_stdp, run_triplet_stdp, Channel, InteractionScheme, PairParams,
    TripletParams,
};
use tstdp_core::svg::{LinePlot, Series};
use tstdp_core::units::{fmt12, parse_duration, parse_param_value, parse_range};
use tstdp_core::SpikeTrain;

pub use output::Format;

pub const OUT_DIR_ENV: &str = "TSTDP_OUT_DIR";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, files or parameter values (exit code 2).
    Validation(String),
    /// A run that could not complete (exit code 3).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    /// Error while reading user-supplied inputs.
    pub fn input(e: tstdp_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }

    pub fn output(e: tstdp_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<tstdp_core::Error> for CliError {
    fn from(e: tstdp_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "tstdp", version, about = "Pair/triplet STDP rules, circuit model, fitting and mismatch runs")]
pub struct Cli {
    /// Directory for written artifacts.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "tstdp-out")]
    pub out_dir: PathBuf,

    /// Format of the table printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Directory searched for datasets (`<name>.csv`) and parameter files
    /// (`params/<name>.kv`) before the bundled copies.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learning window of an ideal rule or a circuit over a grid of delays.
    Window(WindowArgs),
    /// Fit a model to a dataset by minimizing the NMSE.
    Fit(FitArgs),
    /// Run one protocol and export the weight trajectory or event log.
    Simulate(SimulateArgs),
    /// Regenerate a figure's data set from the bundled datasets and parameters.
    Reproduce(reproduce::ReproduceArgs),
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    ModelKind::parse(s).ok_or_else(|| {
        format!(
            "unknown model `{s}`; expected one of: {}",
            ModelKind::ALL.map(|m| m.name()).join(", ")
        )
    })
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Parameter file (path or bundled name such as `table1_row1`).
    #[arg(long)]
    pub params: Option<String>,

    /// Override one parameter, e.g. `--set i_tp1=24pA`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl ParamArgs {
    fn values(&self, data_dir: Option<&Path>) -> Result<(ParamMap, Option<ParamFile>)> {
        let file = self.params.as_deref().map(|p| assets::params(p, data_dir)).transpose()?;
        let mut values = file.as_ref().map(|f| f.values.clone()).unwrap_or_default();
        for s in &self.set {
            let (k, v) = parse_assignment(s)?;
            values.insert(k, v);
        }
        Ok((values, file))
    }
}

fn parse_assignment(s: &str) -> Result<(String, f64)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("`{s}` must be KEY=VALUE")))?;
    let k = k.trim();
    let v = parse_param_value(k, v.trim()).map_err(CliError::input)?;
    Ok((k.to_string(), v))
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: ModelKind,

    #[command(flatten)]
    pub params: ParamArgs,

    #[arg(long)]
    pub a_plus: Option<f64>,
    #[arg(long)]
    pub a_minus: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau_plus: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau_minus: Option<String>,

    /// Delay grid `start:stop:step`, with `dt = t_post - t_pre`.
    #[arg(long, allow_hyphen_values = true, default_value = "-100ms:100ms:1ms")]
    pub dt: String,

    /// File name stem of the written artifacts.
    #[arg(long, default_value = "window")]
    pub stem: String,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: ModelKind,

    /// Dataset path or bundled name (`visual_cortex`, `hippocampal`).
    #[arg(long)]
    pub dataset: String,

    #[command(flatten)]
    pub params: ParamArgs,

    /// Parameters to fit, as `name` (default bounds) or `name=lo:hi[:log]`.
    /// Everything else is held at the given values.
    #[arg(long, value_delimiter = ',')]
    pub free: Vec<String>,

    #[arg(long, default_value_t = 20_000)]
    pub budget: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Latin-hypercube starts.
    #[arg(long, default_value_t = fitting::DEFAULT_STARTS)]
    pub starts: usize,

    #[arg(long)]
    pub stem: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: ModelKind,

    #[command(flatten)]
    pub params: ParamArgs,

    /// Protocol: pairing, pre_post_pre, post_pre_post or quadruplet.
    #[arg(long, default_value = "pairing")]
    pub protocol: String,
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub dt1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub dt2: Option<String>,
    /// Quadruplet midpoint separation T.
    #[arg(long, allow_hyphen_values = true)]
    pub t_sep: Option<String>,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    pub rho: f64,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    pub reps: usize,

    #[arg(long, default_value = "simulate")]
    pub stem: String,
}

pub fn run(cli: &Cli) -> Result<()> {
    let data_dir = cli.data_dir.as_deref();
    match &cli.command {
        Command::Window(a) => cmd_window(a, &cli.out_dir, cli.format, data_dir),
        Command::Fit(a) => cmd_fit(a, &cli.out_dir, cli.format, data_dir),
        Command::Simulate(a) => cmd_simulate(a, &cli.out_dir, cli.format, data_dir),
        Command::Reproduce(a) => reproduce::run(a, &cli.out_dir, cli.format, data_dir),
    }
}

/// Parses `args` and runs the command, printing errors to stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn default_circuit_params(topology: CircuitTopology) -> &'static str {
    match topology {
        CircuitTopology::PairFig1b => "table1_row1",
        CircuitTopology::TripletMinimalVisual => "table2",
        CircuitTopology::TripletMinimalHippocampal | CircuitTopology::TripletFull => "table3",
    }
}

/// Circuit parameters from `values`, falling back to the bundled set for
/// the topology when no bias is given.
fn circuit_params(topology: CircuitTopology, values: &ParamMap, data_dir: Option<&Path>) -> Result<CircuitParams> {
    let mut merged = ParamMap::new();
    let has_bias = values.keys().any(|k| tstdp_core::circuit::Bias::from_name(k).is_some());
    if !has_bias {
        merged = assets::params(default_circuit_params(topology), data_dir)?.values;
    }
    merged.extend(values.clone());
    let mut p = CircuitParams::default();
    for (k, v) in &merged {
        p.set(k, *v).map_err(CliError::input)?;
    }
    p.validate().map_err(CliError::input)?;
    Ok(p)
}

fn pair_params(a: &WindowArgs, values: &ParamMap) -> Result<PairParams> {
    let mut p = PairParams {
        a_plus: 1.0,
        a_minus: 0.5,
        tau_plus: 16.8e-3,
        tau_minus: 33.7e-3,
    };
    for (k, v) in values {
        match k.as_str() {
            "a_plus" | "a2_plus" => p.a_plus = *v,
            "a_minus" | "a2_minus" => p.a_minus = *v,
            "tau_plus" => p.tau_plus = *v,
            "tau_minus" => p.tau_minus = *v,
            _ => {}
        }
    }
    if let Some(v) = a.a_plus {
        p.a_plus = v;
    }
    if let Some(v) = a.a_minus {
        p.a_minus = v;
    }
    if let Some(s) = &a.tau_plus {
        p.tau_plus = parse_duration(s).map_err(CliError::input)?;
    }
    if let Some(s) = &a.tau_minus {
        p.tau_minus = parse_duration(s).map_err(CliError::input)?;
    }
    p.validate().map_err(CliError::input)?;
    Ok(p)
}

fn triplet_params(pair: &PairParams, values: &ParamMap) -> Result<TripletParams> {
    let mut map = TripletParams::from_pair(pair).to_map();
    for (k, v) in values {
        if TripletParams::NAMES.contains(&k.as_str()) {
            map.insert(k.clone(), *v);
        }
    }
    let p = TripletParams::from_map(&map).map_err(CliError::input)?;
    p.validate().map_err(CliError::input)?;
    Ok(p)
}

fn window_svg(title: &str, curves: &[(&str, &[(f64, f64)])]) -> String {
    let mut plot = LinePlot::new(title, "dt (ms)", "dw");
    for (name, pts) in curves {
        plot.push(Series::line(name, pts.iter().map(|&(dt, dw)| (dt * 1e3, dw)).collect()));
    }
    plot.render()
}

pub fn lobes_csv(window: &[(f64, f64)], params: &CircuitParams) -> String {
    let mut s = String::from("side,amplitude,tau_ms,r_squared,points\n");
    for (name, side) in [("pot", LobeSide::Pot), ("dep", LobeSide::Dep)] {
        if let Ok(f) = fit_lobe(window, side, params) {
            let _ = writeln!(
                s,
                "{name},{},{},{},{}",
                fmt12(f.amplitude),
                fmt12(f.tau * 1e3),
                fmt12(f.r_squared),
                f.points
            );
        }
    }
    s
}

fn cmd_window(a: &WindowArgs, out: &Path, format: Format, data_dir: Option<&Path>) -> Result<()> {
    let grid = parse_range(&a.dt).map_err(CliError::input)?;
    let (values, _) = a.params.values(data_dir)?;
    let window: Vec<(f64, f64)> = match a.model {
        ModelKind::IdealPair => {
            let p = pair_params(a, &values)?;
            grid.iter().map(|&dt| Ok((dt, pair_delta_w(dt, &p)?))).collect::<tstdp_core::Result<_>>()?
        }
        ModelKind::IdealTriplet(variant) => {
            let p = triplet_params(&pair_params(a, &values)?, &values)?;
            p.validate_variant(variant).map_err(CliError::input)?;
            grid.iter()
                .map(|&dt| {
                    let (pre, post) = tstdp_core::circuit::isolated_pair(dt)?;
                    Ok((dt, run_triplet_stdp(&pre, &post, &p, InteractionScheme::NearestSpike)?.total))
                })
                .collect::<tstdp_core::Result<_>>()?
        }
        ModelKind::Circuit(topology) => {
            let p = circuit_params(topology, &values, data_dir)?;
            let w = stdp_window(topology, &p, &grid)?;
            output::save(out, &format!("{}_lobes.csv", a.stem), &lobes_csv(&w, &p))?;
            w
        }
    };
    let csv = csv_table(&["dt_ms", "dw"], window.iter().map(|&(dt, dw)| vec![dt * 1e3, dw]));
    output::save(out, &format!("{}.csv", a.stem), &csv)?;
    output::save(out, &format!("{}.svg", a.stem), &window_svg(a.model.name(), &[(a.model.name(), &window)]))?;
    output::emit(format, &csv);
    Ok(())
}

fn parse_free(spec: &str) -> Result<FreeParam> {
    match spec.split_once('=') {
        None => default_bound(spec.trim())
            .ok_or_else(|| CliError::Validation(format!("no default bounds for `{spec}`; use name=lo:hi[:log]"))),
        Some((name, range)) => {
            let name = name.trim();
            let parts: Vec<&str> = range.split(':').collect();
            let log = match parts.get(2) {
                None => false,
                Some(&"log") => true,
                Some(other) => return Err(CliError::Validation(format!("unknown scale `{other}` for `{name}`"))),
            };
            if parts.len() < 2 {
                return Err(CliError::Validation(format!("`{spec}` must be name=lo:hi[:log]")));
            }
            let lo = parse_param_value(name, parts[0]).map_err(CliError::input)?;
            let hi = parse_param_value(name, parts[1]).map_err(CliError::input)?;
            Ok(if log { FreeParam::log(name, lo, hi) } else { FreeParam::linear(name, lo, hi) })
        }
    }
}

fn fit_header(result: &fitting::FitResult, dataset: &str) -> Vec<String> {
    vec![
        format!("nmse = {}", fmt12(result.nmse)),
        format!("evaluations = {}", result.evaluations),
        format!("seed = {}", result.seed),
        format!("dataset = {dataset}"),
    ]
}

fn cmd_fit(a: &FitArgs, out: &Path, format: Format, data_dir: Option<&Path>) -> Result<()> {
    let dataset = assets::dataset(&a.dataset, data_dir)?;
    let (values, _) = a.params.values(data_dir)?;
    let free = if a.free.is_empty() {
        None
    } else {
        Some(a.free.iter().map(|s| parse_free(s)).collect::<Result<Vec<_>>>()?)
    };
    let mut problem = FitProblem::from_values(a.model, dataset.clone(), &values, free).map_err(CliError::input)?;
    problem.starts = a.starts;
    let result = fitting::fit(&problem, a.budget, a.seed)?;
    let stem = a.stem.clone().unwrap_or_else(|| format!("fit_{}_{}", a.model.name(), dataset.name));
    let mut file = ParamFile {
        values: result.best_params.clone(),
        ..ParamFile::default()
    };
    file.strings.insert("model".into(), a.model.name().into());
    file.strings.insert("dataset".into(), dataset.name.clone());
    let header = fit_header(&result, &dataset.name);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    output::save(out, &format!("{stem}.kv"), &file.to_text(&header))?;
    let residuals = residuals_csv(&result.per_point);
    output::save(out, &format!("{stem}_residuals.csv"), &residuals)?;
    write_results(out, &stem, &result.per_point).map_err(CliError::output)?;
    eprintln!("nmse = {} ({} evaluations)", fmt12(result.nmse), result.evaluations);
    let params: serde_json::Map<String, serde_json::Value> =
        result.best_params.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    output::emit_value(
        format,
        &residuals,
        json!({
            "model": a.model.name(),
            "dataset": dataset.name,
            "nmse": result.nmse,
            "evaluations": result.evaluations,
            "seed": result.seed,
            "params": params,
            "points": output::csv_to_json(&residuals),
        }),
    );
    Ok(())
}

fn required_time(v: &Option<String>, flag: &str) -> Result<f64> {
    let s = v
        .as_deref()
        .ok_or_else(|| CliError::Validation(format!("--{flag} is required for this protocol")))?;
    parse_duration(s).map_err(CliError::input)
}

fn protocol_from(a: &SimulateArgs) -> Result<ProtocolSpec> {
    let (rho, reps) = (a.rho, a.reps);
    let spec = match a.protocol.as_str() {
        "pairing" => ProtocolSpec::Pairing {
            dt: required_time(&a.dt, "dt")?,
            rho,
            reps,
        },
        "pre_post_pre" => ProtocolSpec::TripletPrePostPre {
            dt1: required_time(&a.dt1, "dt1")?,
            dt2: required_time(&a.dt2, "dt2")?,
            rho,
            reps,
        },
        "post_pre_post" => ProtocolSpec::TripletPostPrePost {
            dt1: required_time(&a.dt1, "dt1")?,
            dt2: required_time(&a.dt2, "dt2")?,
            rho,
            reps,
        },
        "quadruplet" => ProtocolSpec::Quadruplet {
            dt: required_time(&a.dt, "dt")?,
            t_sep: required_time(&a.t_sep, "t-sep")?,
            rho,
            reps,
        },
        other => return Err(CliError::Validation(format!("unknown protocol `{other}`"))),
    };
    spec.validate().map_err(CliError::input)?;
    Ok(spec)
}

fn event_log_csv(events: &[tstdp_core::rules::WeightEvent]) -> String {
    let mut s = String::from("t_seconds,channel,dw\n");
    for e in events {
        let ch = match e.channel {
            Channel::Pre => "pre",
            Channel::Post => "post",
        };
        let _ = writeln!(s, "{},{ch},{}", fmt12(e.time), fmt12(e.dw));
    }
    s
}

fn cmd_simulate(a: &SimulateArgs, out: &Path, format: Format, data_dir: Option<&Path>) -> Result<()> {
    let spec = protocol_from(a)?;
    let (pre, post): (SpikeTrain, SpikeTrain) = build_trains(&spec)?;
    let (values, _) = a.params.values(data_dir)?;
    let summary = match a.model {
        ModelKind::Circuit(topology) => {
            let p = circuit_params(topology, &values, data_dir)?;
            let run = simulate_circuit(topology, &p, &pre, &post)?;
            output::save(out, &format!("{}_trajectory.csv", a.stem), &trajectory_csv(&run.trajectory))?;
            if run.saturated() {
                eprintln!("warning: weight voltage reached a rail");
            }
            format!(
                "dw,v_w_initial,v_w_final,saturated\n{},{},{},{}\n",
                fmt12(run.dw),
                fmt12(run.v_w_initial),
                fmt12(run.v_w_final),
                run.saturated()
            )
        }
        ModelKind::IdealPair => {
            let map = values.clone();
            let p = PairParams::from_map(&map).map_err(CliError::input)?;
            let run = run_pair_stdp(&pre, &post, &p, InteractionScheme::NearestSpike)?;
            output::save(out, &format!("{}_events.csv", a.stem), &event_log_csv(&run.events))?;
            format!("dw\n{}\n", fmt12(run.total))
        }
        ModelKind::IdealTriplet(variant) => {
            let p = TripletParams::from_map(&values).map_err(CliError::input)?;
            p.validate_variant(variant).map_err(CliError::input)?;
            let run = run_triplet_stdp(&pre, &post, &p, InteractionScheme::NearestSpike)?;
            output::save(out, &format!("{}_events.csv", a.stem), &event_log_csv(&run.events))?;
            format!("dw\n{}\n", fmt12(run.total))
        }
    };
    output::emit(format, &summary);
    Ok(())
}
