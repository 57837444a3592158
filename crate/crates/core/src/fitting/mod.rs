//! NMSE objective and multi-start bounded Nelder–Mead fitting.

pub mod nelder_mead;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{circuit_dw, Bias, CircuitParams, CircuitTopology, BIAS_MAX, BIAS_MIN};
use crate::data_io::{DataPoint, Dataset, PointResult};
use crate::error::{Error, Result};
use crate::params::ParamMap;
use crate::protocols::build_trains;
use crate::rules::{
    run_pair_stdp, triplet_total, InteractionScheme, PairParams, TripletParams, TripletVariant,
};

pub const DEFAULT_STARTS: usize = 32;
pub const AMPLITUDE_BOUNDS: (f64, f64) = (0.0, 0.5);
pub const TAU_BOUNDS: (f64, f64) = (1e-3, 1.0);
/// Value given to `tau_x` when no term of the variant reads it.
pub const UNUSED_TAU: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    IdealPair,
    IdealTriplet(TripletVariant),
    Circuit(CircuitTopology),
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::IdealPair => "ideal-pair",
            ModelKind::IdealTriplet(TripletVariant::Full) => "ideal-triplet",
            ModelKind::IdealTriplet(TripletVariant::MinimalVisualCortex) => "ideal-triplet-minimal-vc",
            ModelKind::IdealTriplet(TripletVariant::MinimalHippocampal) => "ideal-triplet-minimal-hc",
            ModelKind::Circuit(CircuitTopology::PairFig1b) => "circuit-pair",
            ModelKind::Circuit(CircuitTopology::TripletFull) => "circuit-triplet",
            ModelKind::Circuit(CircuitTopology::TripletMinimalVisual) => "circuit-triplet-minimal-vc",
            ModelKind::Circuit(CircuitTopology::TripletMinimalHippocampal) => {
                "circuit-triplet-minimal-hc"
            }
        }
    }

    pub const ALL: [ModelKind; 8] = [
        ModelKind::IdealPair,
        ModelKind::IdealTriplet(TripletVariant::Full),
        ModelKind::IdealTriplet(TripletVariant::MinimalVisualCortex),
        ModelKind::IdealTriplet(TripletVariant::MinimalHippocampal),
        ModelKind::Circuit(CircuitTopology::PairFig1b),
        ModelKind::Circuit(CircuitTopology::TripletFull),
        ModelKind::Circuit(CircuitTopology::TripletMinimalVisual),
        ModelKind::Circuit(CircuitTopology::TripletMinimalHippocampal),
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeParam {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub log: bool,
}

impl FreeParam {
    pub fn linear(name: &str, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
            log: false,
        }
    }

    pub fn log(name: &str, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
            log: true,
        }
    }

    fn from_unit(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if self.log {
            (self.lower.ln() + u * (self.upper.ln() - self.lower.ln())).exp().clamp(self.lower, self.upper)
        } else {
            self.lower + u * (self.upper - self.lower)
        }
    }

    fn to_unit(&self, x: f64) -> f64 {
        let x = x.clamp(self.lower, self.upper);
        if self.log {
            (x.ln() - self.lower.ln()) / (self.upper.ln() - self.lower.ln())
        } else {
            (x - self.lower) / (self.upper - self.lower)
        }
    }
}

/// Default search range for a named parameter.
pub fn default_bound(name: &str) -> Option<FreeParam> {
    let (lo, hi) = AMPLITUDE_BOUNDS;
    let (tlo, thi) = TAU_BOUNDS;
    if PairParams::NAMES[..2].contains(&name) || TripletParams::NAMES[..4].contains(&name) {
        return Some(FreeParam::linear(name, lo, hi));
    }
    if name.starts_with("tau_") {
        return Some(FreeParam::log(name, tlo, thi));
    }
    if Bias::from_name(name).is_some() {
        let canonical = Bias::from_name(name)?.name();
        return Some(FreeParam::log(canonical, BIAS_MIN, BIAS_MAX));
    }
    match name {
        "i_0" => Some(FreeParam::log(name, 1e-17, 1e-13)),
        "n_slope" => Some(FreeParam::linear(name, 1.0, 2.0)),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct FitProblem {
    pub model: ModelKind,
    pub dataset: Dataset,
    pub free: Vec<FreeParam>,
    pub fixed: ParamMap,
    pub scheme: InteractionScheme,
    /// Per-bias current multipliers applied to circuit models, in [`Bias::ALL`] order.
    pub bias_multipliers: [f64; 8],
    /// Number of Latin-hypercube starts.
    pub starts: usize,
    /// Additional start points, evaluated before the Latin-hypercube ones.
    pub extra_starts: Vec<ParamMap>,
}

impl FitProblem {
    /// Problem with the default free parameters and bounds for `model`.
    /// Circuit models take their fixed constants from `base`.
    pub fn new(model: ModelKind, dataset: Dataset, base: &CircuitParams) -> Self {
        let (lo, hi) = AMPLITUDE_BOUNDS;
        let (tlo, thi) = TAU_BOUNDS;
        let mut free = Vec::new();
        let mut fixed = ParamMap::new();
        match model {
            ModelKind::IdealPair => {
                free.push(FreeParam::linear("a_plus", lo, hi));
                free.push(FreeParam::linear("a_minus", lo, hi));
                free.push(FreeParam::log("tau_plus", tlo, thi));
                free.push(FreeParam::log("tau_minus", tlo, thi));
            }
            ModelKind::IdealTriplet(variant) => {
                let zeroed = variant.zeroed();
                for name in &TripletParams::NAMES[..4] {
                    if zeroed.contains(name) {
                        fixed.insert(name.to_string(), 0.0);
                    } else {
                        free.push(FreeParam::linear(name, lo, hi));
                    }
                }
                for name in &TripletParams::NAMES[4..] {
                    if *name == "tau_x" && zeroed.contains(&"a3_minus") {
                        fixed.insert(name.to_string(), UNUSED_TAU);
                    } else {
                        free.push(FreeParam::log(name, tlo, thi));
                    }
                }
            }
            ModelKind::Circuit(topology) => {
                let used = topology.biases();
                for (name, value) in base.to_map() {
                    match Bias::from_name(&name) {
                        Some(b) if used.contains(&b) => {
                            free.push(FreeParam::log(&name, BIAS_MIN, BIAS_MAX))
                        }
                        _ => {
                            fixed.insert(name, value);
                        }
                    }
                }
            }
        }
        Self {
            model,
            dataset,
            free,
            fixed,
            scheme: InteractionScheme::NearestSpike,
            bias_multipliers: [1.0; 8],
            starts: DEFAULT_STARTS,
            extra_starts: Vec::new(),
        }
    }

    /// Problem whose fixed values come from `values` (circuit constants fall
    /// back to defaults). With `free = None` the model's default free set is
    /// used and `values` entries for free parameters become an extra start.
    pub fn from_values(
        model: ModelKind,
        dataset: Dataset,
        values: &ParamMap,
        free: Option<Vec<FreeParam>>,
    ) -> Result<Self> {
        let base = match model {
            ModelKind::Circuit(_) => {
                let mut p = CircuitParams::default();
                for (k, &v) in values {
                    if p.set(k, v).is_err() {
                        return Err(Error::Validation(format!("unknown circuit parameter `{k}`")));
                    }
                }
                p
            }
            _ => CircuitParams::default(),
        };
        let mut problem = Self::new(model, dataset, &base);
        let known: Vec<String> = match model {
            ModelKind::IdealPair => PairParams::NAMES.iter().map(|s| s.to_string()).collect(),
            ModelKind::IdealTriplet(_) => TripletParams::NAMES.iter().map(|s| s.to_string()).collect(),
            ModelKind::Circuit(_) => base.to_map().into_keys().collect(),
        };
        let mut canonical = ParamMap::new();
        for (k, &v) in values {
            let name = match model {
                ModelKind::Circuit(_) => Bias::from_name(k).map_or(k.as_str(), |b| b.name()).to_string(),
                _ => k.clone(),
            };
            if !known.contains(&name) {
                return Err(Error::Validation(format!(
                    "`{k}` is not a parameter of {}",
                    model.name()
                )));
            }
            canonical.insert(name, v);
        }
        match free {
            None => {
                let start: ParamMap = problem
                    .free
                    .iter()
                    .filter_map(|f| canonical.get(&f.name).map(|v| (f.name.clone(), *v)))
                    .collect();
                for (k, v) in &canonical {
                    if !problem.free.iter().any(|f| &f.name == k) {
                        problem.fixed.insert(k.clone(), *v);
                    }
                }
                if start.len() == problem.free.len() && !start.is_empty() {
                    problem.extra_starts.push(start);
                }
            }
            Some(free) => {
                let mut all = problem.full_params(&ParamMap::new());
                for f in &problem.free {
                    if let Some(v) = canonical.get(&f.name) {
                        all.insert(f.name.clone(), *v);
                    }
                }
                all.extend(canonical.clone());
                for f in &free {
                    if !known.contains(&f.name) {
                        return Err(Error::Validation(format!(
                            "`{}` is not a parameter of {}",
                            f.name,
                            model.name()
                        )));
                    }
                }
                let mut start = ParamMap::new();
                for f in &free {
                    if let Some(v) = all.remove(&f.name) {
                        start.insert(f.name.clone(), v);
                    }
                }
                for name in &known {
                    if !all.contains_key(name) && !free.iter().any(|f| &f.name == name) {
                        return Err(Error::Validation(format!("no value given for fixed parameter `{name}`")));
                    }
                }
                problem.fixed = all;
                problem.free = free;
                if start.len() == problem.free.len() && !start.is_empty() {
                    problem.extra_starts.push(start);
                }
            }
        }
        Ok(problem)
    }

    /// Moves `name` from the free set to the fixed set.
    pub fn fix(&mut self, name: &str, value: f64) -> Result<()> {
        let idx = self
            .free
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| Error::Validation(format!("`{name}` is not a free parameter")))?;
        self.free.remove(idx);
        self.fixed.insert(name.into(), value);
        Ok(())
    }

    /// Moves `name` from the fixed set to the free set.
    pub fn release(&mut self, param: FreeParam) -> Result<()> {
        if self.free.iter().any(|p| p.name == param.name) {
            return Err(Error::Validation(format!("`{}` is already free", param.name)));
        }
        self.fixed.remove(&param.name);
        self.free.push(param);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.free {
            if !(p.lower.is_finite() && p.upper.is_finite() && p.lower < p.upper) {
                return Err(Error::Validation(format!(
                    "bounds for `{}` must be finite with lower < upper, got [{}, {}]",
                    p.name, p.lower, p.upper
                )));
            }
            if p.log && p.lower <= 0.0 {
                return Err(Error::Validation(format!(
                    "log-scaled `{}` needs a positive lower bound",
                    p.name
                )));
            }
            if self.fixed.contains_key(&p.name) {
                return Err(Error::Validation(format!("`{}` is both free and fixed", p.name)));
            }
        }
        let mut names: Vec<&str> = self.free.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation("duplicate free parameter".into()));
        }
        if let ModelKind::IdealTriplet(variant) = self.model {
            for name in variant.zeroed() {
                if self.fixed.get(*name) != Some(&0.0) {
                    return Err(Error::Validation(format!(
                        "{variant:?} requires `{name}` fixed at 0"
                    )));
                }
            }
        }
        if self.bias_multipliers.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::Validation("bias multipliers must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Fixed values overlaid with `params`.
    pub fn full_params(&self, params: &ParamMap) -> ParamMap {
        let mut all = self.fixed.clone();
        all.extend(params.iter().map(|(k, v)| (k.clone(), *v)));
        all
    }

    fn from_unit(&self, u: &[f64]) -> ParamMap {
        self.free
            .iter()
            .zip(u)
            .map(|(p, &u)| (p.name.clone(), p.from_unit(u)))
            .collect()
    }

    fn to_unit(&self, params: &ParamMap) -> Result<Vec<f64>> {
        let all = self.full_params(params);
        self.free
            .iter()
            .map(|p| {
                all.get(&p.name)
                    .map(|&x| p.to_unit(x))
                    .ok_or_else(|| Error::Validation(format!("start point lacks `{}`", p.name)))
            })
            .collect()
    }
}

enum Model {
    Pair(PairParams),
    Triplet(TripletParams),
    Circuit(CircuitTopology, CircuitParams),
}

fn build_model(problem: &FitProblem, all: &ParamMap) -> Result<Model> {
    Ok(match problem.model {
        ModelKind::IdealPair => {
            let p = PairParams::from_map(all)?;
            p.validate()?;
            Model::Pair(p)
        }
        ModelKind::IdealTriplet(variant) => {
            let p = TripletParams::from_map(all)?;
            p.validate_variant(variant)?;
            Model::Triplet(p)
        }
        ModelKind::Circuit(topology) => {
            let p = CircuitParams::from_map(all)?.with_multipliers(&problem.bias_multipliers);
            Model::Circuit(topology, p)
        }
    })
}

fn point_dw(model: &Model, point: &DataPoint, scheme: InteractionScheme) -> Result<f64> {
    let (pre, post) = build_trains(&point.protocol)?;
    match model {
        Model::Pair(p) => Ok(run_pair_stdp(&pre, &post, p, scheme)?.total),
        Model::Triplet(p) => Ok(triplet_total(&pre, &post, p, scheme)),
        Model::Circuit(topology, p) => circuit_dw(*topology, p, &pre, &post),
    }
}

/// Model weight change for every dataset point, in dataset order.
/// `params` overrides the problem's fixed values.
pub fn evaluate_model(problem: &FitProblem, params: &ParamMap) -> Result<Vec<f64>> {
    let all = problem.full_params(params);
    let model = build_model(problem, &all)?;
    problem
        .dataset
        .points
        .iter()
        .map(|pt| {
            point_dw(&model, pt, problem.scheme).map_err(|e| Error::Point {
                label: pt.label.clone(),
                source: Box::new(e),
            })
        })
        .collect()
}

/// Normalized mean square error of `model_dw` against `dataset`.
pub fn nmse(model_dw: &[f64], dataset: &Dataset) -> Result<f64> {
    if model_dw.len() != dataset.points.len() {
        return Err(Error::LengthMismatch {
            expected: dataset.points.len(),
            got: model_dw.len(),
        });
    }
    if dataset.points.is_empty() {
        return Err(Error::Validation("NMSE of an empty dataset is undefined".into()));
    }
    let mut sum = 0.0;
    for (dw, pt) in model_dw.iter().zip(&dataset.points) {
        if !(pt.sem > 0.0) {
            return Err(Error::Validation(format!(
                "point `{}` has non-positive sem {}",
                pt.label, pt.sem
            )));
        }
        sum += ((pt.dw_exp - dw) / pt.sem).powi(2);
    }
    Ok(sum / dataset.points.len() as f64)
}

/// NMSE of the problem's model at `params`.
pub fn objective(problem: &FitProblem, params: &ParamMap) -> Result<f64> {
    nmse(&evaluate_model(problem, params)?, &problem.dataset)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: ModelKind,
    /// Free and fixed values together.
    pub best_params: ParamMap,
    pub nmse: f64,
    pub per_point: Vec<PointResult>,
    pub evaluations: usize,
    pub seed: u64,
}

impl FitResult {
    /// Result of evaluating the problem at `params` without optimizing.
    pub fn at(problem: &FitProblem, params: &ParamMap, seed: u64) -> Result<Self> {
        let dws = evaluate_model(problem, params)?;
        let nmse = nmse(&dws, &problem.dataset)?;
        Ok(Self {
            model: problem.model,
            best_params: problem.full_params(params),
            nmse,
            per_point: problem
                .dataset
                .points
                .iter()
                .zip(dws)
                .map(|(point, dw_model)| PointResult {
                    point: point.clone(),
                    dw_model,
                })
                .collect(),
            evaluations: 1,
            seed,
        })
    }
}

/// Latin-hypercube sample of `n` points in `[0, 1]^d`.
pub fn latin_hypercube(n: usize, d: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; d]; n];
    for j in 0..d {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (point, s) in points.iter_mut().zip(strata) {
            point[j] = (s as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    points
}

/// Multi-start Nelder–Mead over the problem's free parameters.
///
/// Start points are the problem's extra starts followed by a seeded
/// Latin-hypercube design. The budget is dealt to the starts round-robin and
/// each start runs independently, so results are deterministic for a seed and
/// never get worse as the budget grows.
pub fn fit(problem: &FitProblem, budget: usize, seed: u64) -> Result<FitResult> {
    if budget == 0 {
        return Err(Error::Validation("fit budget must be >= 1".into()));
    }
    problem.validate()?;
    if problem.dataset.is_empty() {
        return Err(Error::Validation("cannot fit an empty dataset".into()));
    }
    let d = problem.free.len();
    let mut starts: Vec<Vec<f64>> = problem
        .extra_starts
        .iter()
        .map(|s| problem.to_unit(s))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    starts.extend(latin_hypercube(problem.starts, d, &mut rng));
    if d == 0 {
        starts.truncate(1);
        starts.resize(1, Vec::new());
    }
    let n = starts.len();
    let share = |i: usize| budget / n + usize::from(i < budget % n);

    let outcomes: Vec<(Option<nelder_mead::Minimum>, Option<String>)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            let mut first_error = None;
            let f = |u: &[f64]| match objective(problem, &problem.from_unit(u)) {
                Ok(e) => e,
                Err(err) => {
                    first_error.get_or_insert_with(|| err.to_string());
                    f64::INFINITY
                }
            };
            let m = nelder_mead::minimize(f, x0, share(i));
            (m, first_error)
        })
        .collect();

    let evaluations = outcomes.iter().filter_map(|o| o.0.as_ref()).map(|m| m.evaluations).sum();
    let best = outcomes
        .iter()
        .filter_map(|o| o.0.as_ref())
        .filter(|m| m.f.is_finite())
        .map(|m| problem.from_unit(&m.x))
        .map(|p| {
            let e = objective(problem, &p).unwrap_or(f64::INFINITY);
            (e, p)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lex_cmp(&a.1, &b.1)));
    match best {
        Some((e, params)) if e.is_finite() => {
            let mut result = FitResult::at(problem, &params, seed)?;
            result.evaluations = evaluations;
            Ok(result)
        }
        _ => {
            let errors: BTreeMap<&str, usize> = outcomes
                .iter()
                .filter_map(|o| o.1.as_deref())
                .fold(BTreeMap::new(), |mut m, e| {
                    *m.entry(e).or_default() += 1;
                    m
                });
            let detail = errors
                .iter()
                .map(|(e, k)| format!("{k}x {e}"))
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::Fit(format!(
                "no start produced a finite NMSE after {evaluations} evaluations: {detail}"
            )))
        }
    }
}

fn lex_cmp(a: &ParamMap, b: &ParamMap) -> std::cmp::Ordering {
    a.values()
        .zip(b.values())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}
