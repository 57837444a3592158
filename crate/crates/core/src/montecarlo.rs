//! Threshold-voltage mismatch studies on the circuit model.
//!
//! Each trial draws one signed Gaussian threshold shift per bias-current
//! mirror and turns it into a current multiplier `exp(dVth / (n * U_T))`.
//! Trial `k` uses a ChaCha20 generator seeded with the run seed on stream `k`,
//! so any trial can be regenerated on its own.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::circuit::{stdp_window, CircuitParams, CircuitTopology};
use crate::data_io::Dataset;
use crate::error::{Error, Result};
use crate::fitting::{self, FitProblem, ModelKind};
use crate::params::ParamMap;
use crate::units::fmt12;

pub const RNG_ID: &str = "chacha20/rand_chacha-0.9/seed_from_u64+stream=trial";
pub const DISTRIBUTION_ID: &str = "signed-gaussian(mean=0,std=sigma_vth/3)";
/// The 3-sigma threshold spread used for the standard runs.
pub const NOMINAL_SIGMA_VTH: f64 = 26.6e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchSpec {
    /// Threshold deviation at three standard deviations, volts.
    pub sigma_vth: f64,
    pub trials: usize,
    pub seed: u64,
}

impl MismatchSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.sigma_vth.is_finite() || self.sigma_vth < 0.0 {
            return Err(Error::Validation(format!(
                "sigma_vth must be finite and >= 0, got {}",
                self.sigma_vth
            )));
        }
        if self.trials == 0 {
            return Err(Error::Validation("trials must be >= 1".into()));
        }
        Ok(())
    }

    /// Key-value description of the run, including the generator identity.
    pub fn metadata(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "rng = {RNG_ID:?}");
        let _ = writeln!(s, "distribution = {DISTRIBUTION_ID:?}");
        let _ = writeln!(s, "sigma_vth = {}", fmt12(self.sigma_vth));
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

/// Bias multipliers of trial `trial`, in [`crate::circuit::Bias::ALL`] order.
pub fn trial_multipliers(spec: &MismatchSpec, params: &CircuitParams, trial: usize) -> [f64; 8] {
    let std = spec.sigma_vth / 3.0;
    if std == 0.0 {
        return [1.0; 8];
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    rng.set_stream(trial as u64);
    let normal = Normal::new(0.0, std).expect("finite positive std");
    let slope = params.n_slope * params.u_t;
    std::array::from_fn(|_| (normal.sample(&mut rng) / slope).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowStat {
    pub dt: f64,
    pub nominal: f64,
    pub mean: f64,
    pub std: f64,
    /// Fraction of trials that potentiate for `dt > 0` and depress for `dt < 0`.
    pub sign_agreement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchWindow {
    pub spec: MismatchSpec,
    pub dt_grid: Vec<f64>,
    pub nominal: Vec<f64>,
    /// `trials[k][i]` is trial `k` at `dt_grid[i]`.
    pub trials: Vec<Vec<f64>>,
    pub summary: Vec<WindowStat>,
}

/// Potentiation for `dt > 0`, depression for `dt < 0`; zero is allowed on both sides.
fn respects_sign(dt: f64, dw: f64) -> bool {
    !(dt > 0.0 && dw < 0.0) && !(dt < 0.0 && dw > 0.0)
}

impl MismatchWindow {
    /// True when every trial potentiates for `dt > 0` and depresses for `dt < 0`.
    pub fn preserves_ltp_ltd(&self) -> bool {
        self.trials.iter().all(|curve| {
            self.dt_grid
                .iter()
                .zip(curve)
                .all(|(&dt, &dw)| respects_sign(dt, dw))
        })
    }

    pub fn stats_csv(&self) -> String {
        let mut s = String::from("dt_ms,dw_nominal,dw_mean,dw_std,sign_agreement\n");
        for w in &self.summary {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                fmt12(w.dt * 1e3),
                fmt12(w.nominal),
                fmt12(w.mean),
                fmt12(w.std),
                fmt12(w.sign_agreement)
            );
        }
        s
    }

    pub fn trials_csv(&self) -> String {
        let mut s = String::from("trial,dt_ms,dw\n");
        for (k, curve) in self.trials.iter().enumerate() {
            for (dt, dw) in self.dt_grid.iter().zip(curve) {
                let _ = writeln!(s, "{k},{},{}", fmt12(dt * 1e3), fmt12(*dw));
            }
        }
        s
    }
}

/// Learning windows of `spec.trials` mismatched circuits.
pub fn run_mismatch_window(
    topology: CircuitTopology,
    params: &CircuitParams,
    spec: &MismatchSpec,
    dt_grid: &[f64],
) -> Result<MismatchWindow> {
    spec.validate()?;
    params.validate()?;
    let nominal: Vec<f64> = stdp_window(topology, params, dt_grid)?.into_iter().map(|p| p.1).collect();
    let trials: Vec<Vec<f64>> = (0..spec.trials)
        .into_par_iter()
        .map(|k| {
            let p = params.with_multipliers(&trial_multipliers(spec, params, k));
            Ok(stdp_window(topology, &p, dt_grid)?.into_iter().map(|p| p.1).collect())
        })
        .collect::<Result<_>>()?;
    let n = spec.trials as f64;
    let summary = dt_grid
        .iter()
        .enumerate()
        .map(|(i, &dt)| {
            let col: Vec<f64> = trials.iter().map(|c| c[i]).collect();
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let agree = col.iter().filter(|&&v| respects_sign(dt, v)).count() as f64 / n;
            WindowStat {
                dt,
                nominal: nominal[i],
                mean,
                std: var.sqrt(),
                sign_agreement: agree,
            }
        })
        .collect();
    Ok(MismatchWindow {
        spec: *spec,
        dt_grid: dt_grid.to_vec(),
        nominal,
        trials,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefitSpec {
    pub budget: usize,
    /// Latin-hypercube starts in addition to the nominal biases.
    pub starts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialNmse {
    pub trial: usize,
    pub nmse: f64,
    pub refit: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Percentiles {
    pub min: f64,
    pub p05: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
    pub mean: f64,
}

/// Linear-interpolation percentiles of a non-empty sample.
pub fn percentiles(values: &[f64]) -> Percentiles {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let x = p * (v.len() - 1) as f64;
        let (i, f) = (x.floor() as usize, x.fract());
        if i + 1 < v.len() {
            v[i] + f * (v[i + 1] - v[i])
        } else {
            v[i]
        }
    };
    Percentiles {
        min: v[0],
        p05: q(0.05),
        median: q(0.5),
        p95: q(0.95),
        max: v[v.len() - 1],
        mean: v.iter().sum::<f64>() / v.len() as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchNmse {
    pub spec: MismatchSpec,
    pub nominal: f64,
    pub trials: Vec<TrialNmse>,
}

impl MismatchNmse {
    pub fn values(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.nmse).collect()
    }

    pub fn summary(&self) -> Percentiles {
        percentiles(&self.values())
    }

    pub fn csv(&self) -> String {
        let refit = self.trials.iter().any(|t| t.refit.is_some());
        let mut s = String::from(if refit { "trial,nmse,nmse_refit\n" } else { "trial,nmse\n" });
        for t in &self.trials {
            let _ = write!(s, "{},{}", t.trial, fmt12(t.nmse));
            if refit {
                let _ = write!(s, ",{}", t.refit.map(fmt12).unwrap_or_default());
            }
            s.push('\n');
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let p = self.summary();
        let mut s = String::from("statistic,nmse\n");
        for (k, v) in [
            ("nominal", self.nominal),
            ("min", p.min),
            ("p05", p.p05),
            ("median", p.median),
            ("p95", p.p95),
            ("max", p.max),
            ("mean", p.mean),
        ] {
            let _ = writeln!(s, "{k},{}", fmt12(v));
        }
        s
    }
}

fn circuit_problem(topology: CircuitTopology, params: &CircuitParams, dataset: &Dataset) -> FitProblem {
    FitProblem::new(ModelKind::Circuit(topology), dataset.clone(), params)
}

fn nominal_biases(problem: &FitProblem, params: &CircuitParams) -> ParamMap {
    let all = params.to_map();
    problem.free.iter().map(|f| (f.name.clone(), all[&f.name])).collect()
}

/// Dataset NMSE of `spec.trials` mismatched circuits at fixed biases,
/// optionally followed by a per-trial bias refit.
pub fn run_mismatch_nmse(
    topology: CircuitTopology,
    params: &CircuitParams,
    dataset: &Dataset,
    spec: &MismatchSpec,
    refit: Option<RefitSpec>,
) -> Result<MismatchNmse> {
    spec.validate()?;
    params.validate()?;
    let base = circuit_problem(topology, params, dataset);
    let start = nominal_biases(&base, params);
    let nominal = fitting::objective(&base, &start)?;
    let trials = (0..spec.trials)
        .into_par_iter()
        .map(|k| {
            let mut problem = base.clone();
            problem.bias_multipliers = trial_multipliers(spec, params, k);
            let nmse = fitting::objective(&problem, &start)?;
            let refit = match refit {
                None => None,
                Some(r) => {
                    problem.extra_starts = vec![start.clone()];
                    problem.starts = r.starts;
                    Some(fitting::fit(&problem, r.budget, spec.seed ^ k as u64)?.nmse)
                }
            };
            Ok(TrialNmse {
                trial: k,
                nmse,
                refit,
            })
        })
        .collect::<Result<_>>()?;
    Ok(MismatchNmse {
        spec: *spec,
        nominal,
        trials,
    })
}
