//! Figure reproduction sets.

use std::fmt::Write as _;
use std::path::Path;

use clap::{Args, ValueEnum};
use tstdp_core::circuit::{stdp_window, CircuitParams, CircuitTopology};
use tstdp_core::data_io::{residuals_csv, write_results};
use tstdp_core::fitting::{FitProblem, FitResult, ModelKind};
use tstdp_core::montecarlo::{run_mismatch_nmse, run_mismatch_window, MismatchSpec, RefitSpec, NOMINAL_SIGMA_VTH};
use tstdp_core::params::ParamFile;
use tstdp_core::svg::{histogram, LinePlot, Series};
use tstdp_core::units::{fmt12, parse_range, parse_voltage};

use crate::output::{self, Format};
use crate::{assets, lobes_csv, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// Pair circuit on both datasets.
    Fig3,
    /// Minimal triplet circuits on their datasets.
    Fig4,
    /// Pair-circuit learning window with lobe fits.
    Window,
    /// Mismatch spread of the pair-circuit learning window.
    McWindow,
    /// NMSE distribution of the mismatched minimal visual-cortex circuit.
    McNmse,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub figure: Figure,

    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    /// Monte-Carlo trials.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,

    /// Threshold spread at three standard deviations.
    #[arg(long, default_value = "26.6mV")]
    pub sigma_vth: String,

    /// Use the fitted circuit biases instead of the table biases (fig3, fig4).
    #[arg(long)]
    pub fitted: bool,

    /// Parameter file replacing the default one (window, mc-window, mc-nmse).
    #[arg(long)]
    pub params: Option<String>,

    /// Per-trial refit budget for mc-nmse; 0 disables refitting.
    #[arg(long, default_value_t = 0)]
    pub refit_budget: usize,

    /// Delay grid for window and mc-window.
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<String>,
}

fn model_of(file: &ParamFile, fallback: ModelKind) -> Result<ModelKind> {
    match file.strings.get("model") {
        None => Ok(fallback),
        Some(m) => ModelKind::parse(m).ok_or_else(|| CliError::Validation(format!("unknown model `{m}` in parameter file"))),
    }
}

fn circuit_of(file: &ParamFile, fallback: CircuitTopology) -> Result<(CircuitTopology, CircuitParams)> {
    let topology = match model_of(file, ModelKind::Circuit(fallback))? {
        ModelKind::Circuit(t) => t,
        other => return Err(CliError::Validation(format!("{} is not a circuit model", other.name()))),
    };
    let p = CircuitParams::from_map(&file.values).map_err(CliError::input)?;
    Ok((topology, p))
}

struct Panel {
    stem: &'static str,
    params: &'static str,
    fitted: &'static str,
    model: ModelKind,
    dataset: &'static str,
}

const FIG3: [Panel; 2] = [
    Panel {
        stem: "fig3_visual_cortex",
        params: "table1_row1",
        fitted: "fit_circuit_pair_vc",
        model: ModelKind::Circuit(CircuitTopology::PairFig1b),
        dataset: "visual_cortex",
    },
    Panel {
        stem: "fig3_hippocampal",
        params: "table1_row2",
        fitted: "fit_circuit_pair_hc",
        model: ModelKind::Circuit(CircuitTopology::PairFig1b),
        dataset: "hippocampal",
    },
];

const FIG4: [Panel; 2] = [
    Panel {
        stem: "fig4_visual_cortex",
        params: "table2",
        fitted: "fit_circuit_minimal_vc",
        model: ModelKind::Circuit(CircuitTopology::TripletMinimalVisual),
        dataset: "visual_cortex",
    },
    Panel {
        stem: "fig4_hippocampal",
        params: "table3",
        fitted: "fit_circuit_minimal_hc",
        model: ModelKind::Circuit(CircuitTopology::TripletMinimalHippocampal),
        dataset: "hippocampal",
    },
];

fn panels(panels: &[Panel], a: &ReproduceArgs, out: &Path, data_dir: Option<&Path>) -> Result<String> {
    let name = panels[0].stem.split('_').next().unwrap_or("fig");
    let mut summary = String::from("panel_set,model,dataset,params,nmse\n");
    for p in panels {
        let params_name = if a.fitted { p.fitted } else { p.params };
        let file = assets::params(params_name, data_dir)?;
        let model = model_of(&file, p.model)?;
        let dataset = assets::dataset(p.dataset, data_dir)?;
        let problem = FitProblem::from_values(model, dataset, &file.values, Some(Vec::new())).map_err(CliError::input)?;
        let result = FitResult::at(&problem, &Default::default(), a.seed)?;
        write_results(out, p.stem, &result.per_point).map_err(CliError::output)?;
        output::save(out, &format!("{}_residuals.csv", p.stem), &residuals_csv(&result.per_point))?;
        let _ = writeln!(
            summary,
            "{},{},{},{params_name},{}",
            p.stem,
            model.name(),
            p.dataset,
            fmt12(result.nmse)
        );
    }
    output::save(out, &format!("{name}_nmse.csv"), &summary)?;
    Ok(summary)
}

fn grid(a: &ReproduceArgs, default: &str) -> Result<Vec<f64>> {
    parse_range(a.dt.as_deref().unwrap_or(default)).map_err(CliError::input)
}

fn mismatch_spec(a: &ReproduceArgs) -> Result<MismatchSpec> {
    let sigma_vth = parse_voltage(&a.sigma_vth).map_err(CliError::input)?;
    let spec = MismatchSpec {
        sigma_vth,
        trials: a.trials,
        seed: a.seed,
    };
    spec.validate().map_err(CliError::input)?;
    Ok(spec)
}

fn meta(spec: &MismatchSpec, topology: CircuitTopology, params: &str) -> String {
    let mut s = spec.metadata();
    let _ = writeln!(s, "topology = {:?}", format!("{topology:?}"));
    let _ = writeln!(s, "params = {params:?}");
    let _ = writeln!(s, "nominal_sigma_vth = {}", fmt12(NOMINAL_SIGMA_VTH));
    s
}

const SVG_CURVES: usize = 100;

pub fn run(a: &ReproduceArgs, out: &Path, format: Format, data_dir: Option<&Path>) -> Result<()> {
    let table = match a.figure {
        Figure::Fig3 => panels(&FIG3, a, out, data_dir)?,
        Figure::Fig4 => panels(&FIG4, a, out, data_dir)?,
        Figure::Window => {
            let name = a.params.as_deref().unwrap_or("table1_row1");
            let (topology, p) = circuit_of(&assets::params(name, data_dir)?, CircuitTopology::PairFig1b)?;
            let g = grid(a, "-100ms:100ms:1ms")?;
            let w = stdp_window(topology, &p, &g)?;
            let csv = tstdp_core::data_io::csv_table(&["dt_ms", "dw"], w.iter().map(|&(dt, dw)| vec![dt * 1e3, dw]));
            output::save(out, "window.csv", &csv)?;
            let mut plot = LinePlot::new("learning window", "dt (ms)", "dw");
            plot.push(Series::line("circuit", w.iter().map(|&(dt, dw)| (dt * 1e3, dw)).collect()));
            output::save(out, "window.svg", &plot.render())?;
            let lobes = lobes_csv(&w, &p);
            output::save(out, "window_lobes.csv", &lobes)?;
            lobes
        }
        Figure::McWindow => {
            let name = a.params.as_deref().unwrap_or("table1_row1");
            let (topology, p) = circuit_of(&assets::params(name, data_dir)?, CircuitTopology::PairFig1b)?;
            let spec = mismatch_spec(a)?;
            let g = grid(a, "-100ms:100ms:2ms")?;
            let mc = run_mismatch_window(topology, &p, &spec, &g)?;
            let stats = mc.stats_csv();
            output::save(out, "mc_window_stats.csv", &stats)?;
            output::save(out, "mc_window_trials.csv", &mc.trials_csv())?;
            output::save(out, "mc_window_meta.kv", &meta(&spec, topology, name))?;
            let mut plot = LinePlot::new("mismatch learning windows", "dt (ms)", "dw");
            for (k, curve) in mc.trials.iter().take(SVG_CURVES).enumerate() {
                plot.push(Series::line(
                    if k == 0 { "trials" } else { "" },
                    g.iter().zip(curve).map(|(dt, dw)| (dt * 1e3, *dw)).collect(),
                ));
            }
            output::save(out, "mc_window.svg", &plot.render())?;
            if !mc.preserves_ltp_ltd() {
                eprintln!("warning: some trials flip the sign of a window lobe");
            }
            stats
        }
        Figure::McNmse => {
            let name = a.params.as_deref().unwrap_or("fit_circuit_minimal_vc");
            let file = assets::params(name, data_dir)?;
            let (topology, p) = circuit_of(&file, CircuitTopology::TripletMinimalVisual)?;
            let dataset_name = file.strings.get("dataset").cloned().unwrap_or_else(|| "visual_cortex".into());
            let dataset = assets::dataset(&dataset_name, data_dir)?;
            let spec = mismatch_spec(a)?;
            let refit = (a.refit_budget > 0).then_some(RefitSpec {
                budget: a.refit_budget,
                starts: 0,
            });
            let mc = run_mismatch_nmse(topology, &p, &dataset, &spec, refit)?;
            output::save(out, "mc_nmse.csv", &mc.csv())?;
            let summary = mc.summary_csv();
            output::save(out, "mc_nmse_summary.csv", &summary)?;
            output::save(out, "mc_nmse_meta.kv", &meta(&spec, topology, name))?;
            output::save(out, "mc_nmse.svg", &histogram("mismatch NMSE", "NMSE", &mc.values(), 40))?;
            summary
        }
    };
    output::emit(format, &table);
    Ok(())
}
