//! Behavioral model of the pair and triplet STDP circuits.
//!
//! Every internal node is an ideal capacitor `c_node` fed by two ideal
//! current sources: a charging source that is switched on by a spike pulse
//! and a constant discharge source. A diode-connected bias device limits the
//! charged level to `n*U_T*ln(I_bias/i_ref)`, so a fully charged node drives
//! a weight-branch device with current `I_bias * i_0/i_ref`. Between pulses
//! the node discharges linearly, and because the weight-branch device is
//! subthreshold (`i_0*exp(v/(n*U_T))`) the weight current decays
//! exponentially with time constant `c_node*n*U_T/I_decay`.
//!
//! The weight capacitor only integrates current while the opposing pulse is
//! high. Triplet branches stack two devices in series; the stack conducts the
//! smaller of the two device currents. The node that tracks the branch's own
//! channel (e.g. the previous post spike for the post-pre-post term) is
//! charged by a copy of the pulse delayed by one pulse width, so a spike never
//! sees its own contribution.
//!
//! All dynamics are piecewise linear in node voltage, so the simulation
//! advances from edge to edge and integrates weight currents in closed form.
//! Biological times are divided by `time_scale` on input and multiplied back
//! on output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParamMap;
use crate::train::SpikeTrain;

/// The eight bias currents, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bias {
    Pot1,
    Dep1,
    Pot2,
    Dep2,
    Tp1,
    Td1,
    Tp2,
    Td2,
}

impl Bias {
    pub const ALL: [Bias; 8] = [
        Bias::Pot1,
        Bias::Dep1,
        Bias::Pot2,
        Bias::Dep2,
        Bias::Tp1,
        Bias::Td1,
        Bias::Tp2,
        Bias::Td2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Bias::Pot1 => "i_pot1",
            Bias::Dep1 => "i_dep1",
            Bias::Pot2 => "i_pot2",
            Bias::Dep2 => "i_dep2",
            Bias::Tp1 => "i_tp1",
            Bias::Td1 => "i_td1",
            Bias::Tp2 => "i_tp2",
            Bias::Td2 => "i_td2",
        }
    }

    pub fn from_name(name: &str) -> Option<Bias> {
        let canonical = match name {
            "i_pot" => "i_pot1",
            "i_dep" => "i_dep1",
            "i_tp" => "i_tp1",
            "i_td" => "i_td1",
            other => other,
        };
        Bias::ALL.into_iter().find(|b| b.name() == canonical)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub i_pot1: f64,
    pub i_dep1: f64,
    pub i_pot2: f64,
    pub i_dep2: f64,
    pub i_tp1: f64,
    pub i_td1: f64,
    pub i_tp2: f64,
    pub i_td2: f64,
    /// Weight capacitor.
    pub c_w: f64,
    /// Internal decay-node capacitors.
    pub c_node: f64,
    /// Spike pulse width in scaled (simulation) time.
    pub pulse_width: f64,
    pub v_dd: f64,
    pub n_slope: f64,
    pub u_t: f64,
    /// Subthreshold scale current of the weight-branch devices.
    pub i_0: f64,
    /// Subthreshold scale current of the diode-connected bias devices.
    pub i_ref: f64,
    pub time_scale: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        Self {
            i_pot1: 0.0,
            i_dep1: 0.0,
            i_pot2: 0.0,
            i_dep2: 0.0,
            i_tp1: 0.0,
            i_td1: 0.0,
            i_tp2: 0.0,
            i_td2: 0.0,
            c_w: 10e-12,
            c_node: 10e-15,
            pulse_width: 1e-6,
            v_dd: 3.3,
            n_slope: 1.3,
            u_t: 0.02585,
            i_0: 1e-15,
            i_ref: 1e-15,
            time_scale: 1000.0,
        }
    }
}

const CONSTANT_NAMES: [&str; 9] = [
    "c_w",
    "c_node",
    "pulse_width",
    "v_dd",
    "n_slope",
    "u_t",
    "i_0",
    "i_ref",
    "time_scale",
];

impl CircuitParams {
    pub fn bias(&self, b: Bias) -> f64 {
        match b {
            Bias::Pot1 => self.i_pot1,
            Bias::Dep1 => self.i_dep1,
            Bias::Pot2 => self.i_pot2,
            Bias::Dep2 => self.i_dep2,
            Bias::Tp1 => self.i_tp1,
            Bias::Td1 => self.i_td1,
            Bias::Tp2 => self.i_tp2,
            Bias::Td2 => self.i_td2,
        }
    }

    pub fn bias_mut(&mut self, b: Bias) -> &mut f64 {
        match b {
            Bias::Pot1 => &mut self.i_pot1,
            Bias::Dep1 => &mut self.i_dep1,
            Bias::Pot2 => &mut self.i_pot2,
            Bias::Dep2 => &mut self.i_dep2,
            Bias::Tp1 => &mut self.i_tp1,
            Bias::Td1 => &mut self.i_td1,
            Bias::Tp2 => &mut self.i_tp2,
            Bias::Td2 => &mut self.i_td2,
        }
    }

    fn constant_mut(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "c_w" => &mut self.c_w,
            "c_node" => &mut self.c_node,
            "pulse_width" => &mut self.pulse_width,
            "v_dd" => &mut self.v_dd,
            "n_slope" => &mut self.n_slope,
            "u_t" => &mut self.u_t,
            "i_0" => &mut self.i_0,
            "i_ref" => &mut self.i_ref,
            "time_scale" => &mut self.time_scale,
            _ => return None,
        })
    }

    /// Sets a bias or constant by name; unknown names are an error.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if let Some(b) = Bias::from_name(name) {
            *self.bias_mut(b) = value;
            return Ok(());
        }
        match self.constant_mut(name) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(Error::InvalidParams(format!("unknown circuit parameter `{name}`"))),
        }
    }

    /// Defaults overridden by every recognised key of `map`; other keys are ignored.
    pub fn from_map(map: &ParamMap) -> Result<Self> {
        let mut p = Self::default();
        for (k, &v) in map {
            if Bias::from_name(k).is_some() || CONSTANT_NAMES.contains(&k.as_str()) {
                p.set(k, v)?;
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        for b in Bias::ALL {
            m.insert(b.name().to_string(), self.bias(b));
        }
        let mut c = *self;
        for name in CONSTANT_NAMES {
            m.insert(name.to_string(), *c.constant_mut(name).unwrap());
        }
        m
    }

    /// Every bias current multiplied by the matching entry of `m`.
    pub fn with_multipliers(&self, m: &[f64; 8]) -> Self {
        let mut p = *self;
        for (b, k) in Bias::ALL.into_iter().zip(m) {
            *p.bias_mut(b) *= k;
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        for b in Bias::ALL {
            let v = self.bias(b);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!("{} must be >= 0, got {v}", b.name())));
            }
        }
        let positive = [
            ("c_w", self.c_w),
            ("c_node", self.c_node),
            ("pulse_width", self.pulse_width),
            ("v_dd", self.v_dd),
            ("n_slope", self.n_slope),
            ("u_t", self.u_t),
            ("i_0", self.i_0),
            ("i_ref", self.i_ref),
            ("time_scale", self.time_scale),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    fn slope_voltage(&self) -> f64 {
        self.n_slope * self.u_t
    }

    /// Level a node reaches while its charging source `bias` is on.
    pub fn clamp_level(&self, bias: f64) -> f64 {
        if bias <= self.i_ref {
            0.0
        } else {
            (self.slope_voltage() * (bias / self.i_ref).ln()).min(self.v_dd)
        }
    }

    /// Biological time constant of a weight-current lobe set by decay bias `i_tau`.
    pub fn nominal_tau(&self, i_tau: f64) -> f64 {
        self.c_node * self.slope_voltage() / i_tau * self.time_scale
    }

    /// Fractional weight change of one fully-open pulse from amplitude bias `bias`,
    /// ignoring the decay during the pulse.
    pub fn nominal_amplitude(&self, bias: f64) -> f64 {
        bias * (self.i_0 / self.i_ref) * self.pulse_width / (self.c_w * 0.5 * self.v_dd)
    }

    /// Decay bias that yields a biological time constant `tau`.
    pub fn decay_bias_for_tau(&self, tau: f64) -> f64 {
        self.c_node * self.slope_voltage() * self.time_scale / tau
    }

    /// Amplitude bias that yields a nominal fractional pulse amplitude `a`.
    pub fn amplitude_bias_for(&self, a: f64) -> f64 {
        a * self.c_w * 0.5 * self.v_dd * self.i_ref / (self.i_0 * self.pulse_width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CircuitTopology {
    /// Modified pair circuit: one potentiation and one depression branch.
    PairFig1b,
    TripletFull,
    /// Pair potentiation and pre-post-pre branches removed.
    TripletMinimalVisual,
    /// Pre-post-pre branch removed.
    TripletMinimalHippocampal,
}

impl CircuitTopology {
    fn branches(self) -> [bool; 4] {
        // [pair pot, pair dep, triplet pot, triplet dep]
        match self {
            CircuitTopology::PairFig1b => [true, true, false, false],
            CircuitTopology::TripletFull => [true, true, true, true],
            CircuitTopology::TripletMinimalVisual => [false, true, true, false],
            CircuitTopology::TripletMinimalHippocampal => [true, true, true, false],
        }
    }

    /// Bias currents that have an effect in this topology.
    pub fn biases(self) -> Vec<Bias> {
        let [pp, pd, tp, td] = self.branches();
        let mut out = Vec::new();
        if pp {
            out.push(Bias::Pot1);
        }
        if pd {
            out.push(Bias::Dep1);
        }
        if tp {
            out.push(Bias::Pot2);
        }
        if td {
            out.push(Bias::Dep2);
        }
        if pp || tp {
            out.push(Bias::Tp1);
        }
        if pd || td {
            out.push(Bias::Td1);
        }
        if tp {
            out.push(Bias::Tp2);
        }
        if td {
            out.push(Bias::Td2);
        }
        out
    }
}

/// Internal nodes, in trajectory column order.
pub const NODE_NAMES: [&str; 6] = ["v_pot1", "v_dep1", "v_pot2", "v_pot3", "v_dep2", "v_dep3"];
const POT1: usize = 0;
const DEP1: usize = 1;
const POT2: usize = 2;
const POT3: usize = 3;
const DEP2: usize = 4;
const DEP3: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Signal {
    Pre,
    Post,
    PreDelayed,
    PostDelayed,
}

const SIGNALS: usize = 4;

impl Signal {
    fn idx(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy)]
struct NodeSpec {
    charged_by: Signal,
    charge: f64,
    decay: f64,
    clamp: f64,
}

#[derive(Debug, Clone, Copy)]
struct BranchSpec {
    gates: [usize; 2],
    stacked: bool,
    during: Signal,
    sign: f64,
}

/// Sample of the circuit state, time in biological seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub v_w: f64,
    pub nodes: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CircuitRun {
    pub trajectory: Vec<TrajectorySample>,
    pub v_w_initial: f64,
    pub v_w_final: f64,
    /// Fractional change `(v_w_final - v_w_initial) / v_w_initial`.
    pub dw: f64,
    /// Biological times at which the weight hit a rail.
    pub saturation: Vec<f64>,
}

impl CircuitRun {
    pub fn saturated(&self) -> bool {
        !self.saturation.is_empty()
    }
}

/// Weight contributions smaller than this fraction of `v_dd` are discarded.
pub const CUTOFF_FRACTION: f64 = 1e-6;

struct Simulator {
    nodes: [NodeSpec; 6],
    branches: Vec<BranchSpec>,
    i_0: f64,
    slope_v: f64,
    c_node: f64,
    c_w: f64,
    v_dd: f64,
    cutoff: f64,
}

impl Simulator {
    fn new(topology: CircuitTopology, p: &CircuitParams) -> Self {
        let node = |charged_by, charge: f64, decay| NodeSpec {
            charged_by,
            charge,
            decay,
            clamp: p.clamp_level(charge),
        };
        let nodes = [
            node(Signal::Pre, p.i_pot1, p.i_tp1),
            node(Signal::Post, p.i_dep1, p.i_td1),
            node(Signal::PostDelayed, p.i_pot2, p.i_tp2),
            node(Signal::Pre, p.i_pot2, p.i_tp1),
            node(Signal::PreDelayed, p.i_dep2, p.i_td2),
            node(Signal::Post, p.i_dep2, p.i_td1),
        ];
        let [pp, pd, tp, td] = topology.branches();
        let mut branches = Vec::new();
        // a branch whose amplitude source is off never conducts
        if pp && p.i_pot1 > 0.0 {
            branches.push(BranchSpec {
                gates: [POT1, POT1],
                stacked: false,
                during: Signal::Post,
                sign: 1.0,
            });
        }
        if pd && p.i_dep1 > 0.0 {
            branches.push(BranchSpec {
                gates: [DEP1, DEP1],
                stacked: false,
                during: Signal::Pre,
                sign: -1.0,
            });
        }
        if tp && p.i_pot2 > 0.0 {
            branches.push(BranchSpec {
                gates: [POT3, POT2],
                stacked: true,
                during: Signal::Post,
                sign: 1.0,
            });
        }
        if td && p.i_dep2 > 0.0 {
            branches.push(BranchSpec {
                gates: [DEP3, DEP2],
                stacked: true,
                during: Signal::Pre,
                sign: -1.0,
            });
        }
        Self {
            nodes,
            branches,
            i_0: p.i_0,
            slope_v: p.slope_voltage(),
            c_node: p.c_node,
            c_w: p.c_w,
            v_dd: p.v_dd,
            cutoff: CUTOFF_FRACTION * p.v_dd,
        }
    }

    fn slope(&self, i: usize, v: f64, active: &[u32; SIGNALS]) -> f64 {
        let s = self.raw_slope(i, v, active);
        if s < 0.0 && v <= 0.0 {
            0.0
        } else {
            s
        }
    }

    fn raw_slope(&self, i: usize, v: f64, active: &[u32; SIGNALS]) -> f64 {
        let n = &self.nodes[i];
        if active[n.charged_by.idx()] > 0 && n.clamp > 0.0 {
            if v < n.clamp {
                (n.charge - n.decay) / self.c_node
            } else if n.charge >= n.decay {
                0.0
            } else {
                -n.decay / self.c_node
            }
        } else if v > 0.0 {
            -n.decay / self.c_node
        } else {
            0.0
        }
    }

    /// Charge delivered to the weight capacitor by `branch` over `h` seconds
    /// starting from node voltages `v` with slopes `s`.
    fn branch_charge(&self, b: &BranchSpec, v: &[f64; 6], s: &[f64; 6], h: f64) -> f64 {
        let (a1, s1) = (v[b.gates[0]], s[b.gates[0]]);
        if !b.stacked {
            return self.exp_integral(a1, s1, h);
        }
        let (a2, s2) = (v[b.gates[1]], s[b.gates[1]]);
        // the stack follows whichever gate voltage is lower
        let ds = s1 - s2;
        if ds != 0.0 {
            let tc = (a2 - a1) / ds;
            if tc > 0.0 && tc < h {
                let (first, second) = if a1 < a2 { ((a1, s1), (a2, s2)) } else { ((a2, s2), (a1, s1)) };
                // past the crossing the other gate is the lower one
                let at_tc = second.0 + second.1 * tc;
                return self.exp_integral(first.0, first.1, tc) + self.exp_integral(at_tc, second.1, h - tc);
            }
        }
        // no crossing inside the segment: compare at the midpoint
        let mid1 = a1 + 0.5 * h * s1;
        let mid2 = a2 + 0.5 * h * s2;
        if mid1 <= mid2 {
            self.exp_integral(a1, s1, h)
        } else {
            self.exp_integral(a2, s2, h)
        }
    }

    /// `∫_0^h i_0 exp((v0 + s t)/(n U_T)) dt`
    fn exp_integral(&self, v0: f64, s: f64, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        let base = self.i_0 * (v0 / self.slope_v).exp();
        let x = s * h / self.slope_v;
        if x.abs() < 1e-12 {
            base * h
        } else {
            base * h * x.exp_m1() / x
        }
    }

    fn run(&self, pre: &SpikeTrain, post: &SpikeTrain, pulse: f64, scale: f64, record: bool) -> CircuitRun {
        let mut edges: Vec<(f64, i32, Signal)> = Vec::with_capacity(4 * (pre.len() + post.len()));
        for (train, now, delayed) in [
            (pre, Signal::Pre, Signal::PreDelayed),
            (post, Signal::Post, Signal::PostDelayed),
        ] {
            for &t in train.times() {
                let t = t / scale;
                edges.push((t, 1, now));
                edges.push((t + pulse, -1, now));
                edges.push((t + pulse, 1, delayed));
                edges.push((t + 2.0 * pulse, -1, delayed));
            }
        }
        // ends before starts at equal times: pulses are half-open
        edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let v_w0 = 0.5 * self.v_dd;
        let mut run = CircuitRun {
            v_w_initial: v_w0,
            ..Default::default()
        };
        let mut v = [0.0f64; 6];
        let mut v_w = v_w0;
        let mut active = [0u32; SIGNALS];
        let mut acc = vec![0.0f64; self.branches.len()];
        let mut t = edges.first().map_or(0.0, |e| e.0);
        if record {
            run.trajectory.push(TrajectorySample {
                t: t * scale,
                v_w,
                nodes: v,
            });
        }

        let mut i = 0;
        while i < edges.len() {
            let te = edges[i].0;
            self.advance(&mut v, &mut acc, &active, &mut t, te);
            while i < edges.len() && edges[i].0 == te {
                let (_, delta, sig) = edges[i];
                let k = sig.idx();
                if delta < 0 {
                    active[k] -= 1;
                    if active[k] == 0 {
                        for (bi, b) in self.branches.iter().enumerate() {
                            if b.during == sig {
                                let dv = b.sign * acc[bi] / self.c_w;
                                acc[bi] = 0.0;
                                if dv.abs() >= self.cutoff {
                                    v_w += dv;
                                    if v_w > self.v_dd || v_w < 0.0 {
                                        v_w = v_w.clamp(0.0, self.v_dd);
                                        run.saturation.push(te * scale);
                                    }
                                }
                            }
                        }
                    }
                } else {
                    active[k] += 1;
                }
                i += 1;
            }
            if record {
                run.trajectory.push(TrajectorySample {
                    t: te * scale,
                    v_w,
                    nodes: v,
                });
            }
        }
        run.v_w_final = v_w;
        run.dw = (v_w - v_w0) / v_w0;
        run
    }

    fn advance(&self, v: &mut [f64; 6], acc: &mut [f64], active: &[u32; SIGNALS], t: &mut f64, t_end: f64) {
        // idle stretch: nothing integrates, nodes just discharge
        let integrating = self.branches.iter().any(|b| active[b.during.idx()] > 0);
        let charging = self.nodes.iter().any(|n| active[n.charged_by.idx()] > 0);
        if !integrating && !charging {
            let h = t_end - *t;
            for (x, n) in v.iter_mut().zip(&self.nodes) {
                *x = (*x - n.decay / self.c_node * h).max(0.0);
            }
            *t = t_end;
            return;
        }
        while *t < t_end {
            let mut s = [0.0f64; 6];
            for k in 0..6 {
                s[k] = self.slope(k, v[k], active);
            }
            let mut h = t_end - *t;
            let mut hit: Option<usize> = None;
            for k in 0..6 {
                let until = if s[k] > 0.0 {
                    (self.nodes[k].clamp - v[k]) / s[k]
                } else if s[k] < 0.0 {
                    v[k] / -s[k]
                } else {
                    f64::INFINITY
                };
                if until < h {
                    h = until.max(0.0);
                    hit = Some(k);
                }
            }
            for (bi, b) in self.branches.iter().enumerate() {
                if active[b.during.idx()] > 0 {
                    acc[bi] += self.branch_charge(b, v, &s, h);
                }
            }
            for k in 0..6 {
                v[k] = (v[k] + s[k] * h).clamp(0.0, self.nodes[k].clamp.max(v[k]));
            }
            if let Some(k) = hit {
                v[k] = if s[k] > 0.0 { self.nodes[k].clamp } else { 0.0 };
            }
            *t = if hit.is_some() { *t + h } else { t_end };
        }
    }
}

/// Runs the behavioral circuit over a pre/post spike pair of trains.
pub fn simulate_circuit(
    topology: CircuitTopology,
    params: &CircuitParams,
    pre: &SpikeTrain,
    post: &SpikeTrain,
) -> Result<CircuitRun> {
    params.validate()?;
    let sim = Simulator::new(topology, params);
    Ok(sim.run(pre, post, params.pulse_width, params.time_scale, true))
}

/// Fractional weight change only, without recording a trajectory.
pub fn circuit_dw(
    topology: CircuitTopology,
    params: &CircuitParams,
    pre: &SpikeTrain,
    post: &SpikeTrain,
) -> Result<f64> {
    params.validate()?;
    let sim = Simulator::new(topology, params);
    Ok(sim.run(pre, post, params.pulse_width, params.time_scale, false).dw)
}

/// Isolated pre/post pair with `dt = t_post - t_pre`.
pub fn isolated_pair(dt: f64) -> Result<(SpikeTrain, SpikeTrain)> {
    if !dt.is_finite() {
        return Err(Error::Domain(format!("dt must be finite, got {dt}")));
    }
    let pre = SpikeTrain::new(vec![(-dt).max(0.0)])?;
    let post = SpikeTrain::new(vec![dt.max(0.0)])?;
    Ok((pre, post))
}

/// Learning window: weight change of one isolated pair per grid point.
pub fn stdp_window(
    topology: CircuitTopology,
    params: &CircuitParams,
    dt_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    params.validate()?;
    let sim = Simulator::new(topology, params);
    dt_grid
        .par_iter()
        .map(|&dt| {
            let (pre, post) = isolated_pair(dt)?;
            let run = sim.run(&pre, &post, params.pulse_width, params.time_scale, false);
            Ok((dt, run.dw))
        })
        .collect()
}

/// Single-exponential fit `y = amplitude * exp(-|x| / tau)` of one window lobe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub amplitude: f64,
    pub tau: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits one lobe. Points with `y == 0` (beyond the window cutoff) are skipped;
/// the remaining `y` must share one sign.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<ExpFit> {
    let pts: Vec<(f64, f64)> = points.iter().copied().filter(|&(_, y)| y != 0.0).collect();
    if pts.len() < 3 {
        return Err(Error::Range(format!("need at least 3 non-zero points, got {}", pts.len())));
    }
    let sign = pts[0].1.signum();
    if pts.iter().any(|&(_, y)| y.signum() != sign) {
        return Err(Error::Range("lobe changes sign".into()));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.abs()).collect();
    let ls: Vec<f64> = pts.iter().map(|p| p.1.abs().ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let ml = ls.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxl: f64 = xs.iter().zip(&ls).map(|(x, l)| (x - mx) * (l - ml)).sum();
    if sxx == 0.0 {
        return Err(Error::Range("lobe points share one abscissa".into()));
    }
    let slope = sxl / sxx;
    if slope >= 0.0 {
        return Err(Error::Range("lobe does not decay".into()));
    }
    let amplitude = sign * (ml - slope * mx).exp();
    let tau = -1.0 / slope;
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let my = ys.iter().sum::<f64>() / n;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - amplitude * (-x / tau).exp()).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ExpFit {
        amplitude,
        tau,
        r_squared,
        points: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LobeSide {
    /// `dt > 0`, pre before post.
    Pot,
    /// `dt < 0`, post before pre.
    Dep,
}

/// Fits the lobe of a window on one side, skipping the pulse-overlap region.
pub fn fit_lobe(window: &[(f64, f64)], side: LobeSide, params: &CircuitParams) -> Result<ExpFit> {
    let min_gap = 2.0 * params.pulse_width * params.time_scale;
    let lobe: Vec<(f64, f64)> = window
        .iter()
        .copied()
        .filter(|&(dt, _)| match side {
            LobeSide::Pot => dt >= min_gap,
            LobeSide::Dep => dt <= -min_gap,
        })
        .collect();
    fit_exponential(&lobe)
}

fn lobe_grid(tau: f64, params: &CircuitParams, side: LobeSide) -> Vec<f64> {
    let start = 2.0 * params.pulse_width * params.time_scale;
    let stop = start + 4.0 * tau;
    let sign = match side {
        LobeSide::Pot => 1.0,
        LobeSide::Dep => -1.0,
    };
    (0..40).map(|i| sign * (start + (stop - start) * i as f64 / 39.0)).collect()
}

/// Time constant of the fitted lobe for the current decay bias.
pub fn fitted_tau(topology: CircuitTopology, params: &CircuitParams, side: LobeSide) -> Result<f64> {
    let bias = match side {
        LobeSide::Pot => params.i_tp1,
        LobeSide::Dep => params.i_td1,
    };
    if bias <= 0.0 {
        return Err(Error::Range(format!("{side:?} decay bias is zero")));
    }
    let grid = lobe_grid(params.nominal_tau(bias), params, side);
    let window = stdp_window(topology, params, &grid)?;
    Ok(fit_lobe(&window, side, params)?.tau)
}

pub const BIAS_MIN: f64 = 1e-12;
pub const BIAS_MAX: f64 = 10e-6;

/// Decay bias (`i_tp1` for [`LobeSide::Pot`], `i_td1` for [`LobeSide::Dep`])
/// whose simulated window lobe has fitted time constant `target_tau`.
///
/// The bias→τ map is monotone decreasing, so bisection on `ln(bias)` over
/// `[BIAS_MIN, BIAS_MAX]` converges; the result is refined until the fitted
/// τ is within 0.1% of the target.
pub fn calibrate_time_constant(
    target_tau: f64,
    topology: CircuitTopology,
    side: LobeSide,
    base: &CircuitParams,
) -> Result<f64> {
    if !target_tau.is_finite() || target_tau <= 0.0 {
        return Err(Error::Range(format!("target tau must be > 0, got {target_tau}")));
    }
    base.validate()?;
    let [pp, pd, _, _] = topology.branches();
    let (has_branch, amp) = match side {
        LobeSide::Pot => (pp, base.i_pot1),
        LobeSide::Dep => (pd, base.i_dep1),
    };
    if !has_branch || amp <= 0.0 {
        return Err(Error::Range(format!("{topology:?} has no active {side:?} pair branch")));
    }
    // a lobe too short to leave the pulse-overlap region counts as tau = 0
    let tau_at = |bias: f64| -> Result<f64> {
        let mut p = *base;
        match side {
            LobeSide::Pot => p.i_tp1 = bias,
            LobeSide::Dep => p.i_td1 = bias,
        }
        match fitted_tau(topology, &p, side) {
            Err(Error::Range(_)) => Ok(0.0),
            other => other,
        }
    };
    let (mut lo, mut hi) = (BIAS_MIN.ln(), BIAS_MAX.ln());
    let tau_lo = tau_at(BIAS_MIN)?;
    let tau_hi = tau_at(BIAS_MAX)?;
    if target_tau > tau_lo || target_tau < tau_hi {
        return Err(Error::Range(format!(
            "target tau {target_tau} s outside reachable [{tau_hi}, {tau_lo}] s"
        )));
    }
    // start from the analytic estimate
    let guess = base.decay_bias_for_tau(target_tau).clamp(BIAS_MIN, BIAS_MAX);
    let mut x = guess.ln();
    for _ in 0..200 {
        let tau = tau_at(x.exp())?;
        let rel = tau / target_tau - 1.0;
        if rel.abs() < 1e-3 {
            return Ok(x.exp());
        }
        if rel > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        x = 0.5 * (lo + hi);
    }
    Err(Error::Range(format!("calibration for tau {target_tau} s did not converge")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MS: f64 = 1e-3;

    pub(crate) fn table1_row1() -> CircuitParams {
        CircuitParams {
            i_pot1: 150e-9,
            i_dep1: 150e-9,
            i_tp1: 24e-12,
            i_td1: 18e-12,
            ..Default::default()
        }
    }

    #[test]
    fn no_spikes_no_change() {
        let run = simulate_circuit(
            CircuitTopology::PairFig1b,
            &table1_row1(),
            &SpikeTrain::empty(),
            &SpikeTrain::empty(),
        )
        .unwrap();
        assert_eq!(run.dw, 0.0);
        assert!(run.trajectory.iter().all(|s| s.v_w == run.v_w_initial));
    }

    #[test]
    fn pair_lobe_signs() {
        let p = table1_row1();
        let w = stdp_window(CircuitTopology::PairFig1b, &p, &[-20.0 * MS, 20.0 * MS]).unwrap();
        assert!(w[0].1 < 0.0);
        assert!(w[1].1 > 0.0);
    }

    #[test]
    fn lobe_matches_nominal_shape() {
        let p = table1_row1();
        let pw = p.pulse_width * p.time_scale;
        let tau = p.nominal_tau(p.i_tp1);
        let amp = p.nominal_amplitude(p.i_pot1);
        // pulse starting `dt - pw` after the node starts to decay
        let dt = 10.0 * MS;
        let expect = amp * (-(dt - pw) / tau).exp() * (tau / pw) * (1.0 - (-pw / tau).exp());
        let w = stdp_window(CircuitTopology::PairFig1b, &p, &[dt]).unwrap();
        assert!((w[0].1 / expect - 1.0).abs() < 1e-9, "{} vs {}", w[0].1, expect);
    }

    #[test]
    fn far_tail_is_exactly_zero() {
        let p = table1_row1();
        let w = stdp_window(CircuitTopology::PairFig1b, &p, &[-2.0, 2.0]).unwrap();
        assert_eq!(w[0].1, 0.0);
        assert_eq!(w[1].1, 0.0);
    }

    #[test]
    fn exp_fit_recovers_known_curve() {
        let pts: Vec<(f64, f64)> = (1..30).map(|i| {
            let x = i as f64 * 2.0 * MS;
            (x, 0.3 * (-x / (17.0 * MS)).exp())
        }).collect();
        let f = fit_exponential(&pts).unwrap();
        assert!((f.tau / (17.0 * MS) - 1.0).abs() < 1e-9);
        assert!((f.amplitude - 0.3).abs() < 1e-9);
        assert!(f.r_squared > 0.999_999);
    }

    #[test]
    fn params_map_round_trip() {
        let p = table1_row1();
        assert_eq!(CircuitParams::from_map(&p.to_map()).unwrap(), p);
        let mut bad = p;
        bad.c_node = 0.0;
        assert!(bad.validate().is_err());
        assert!(p.clone().set("i_bogus", 1.0).is_err());
    }

    #[test]
    fn calibrate_rejects_non_positive() {
        let p = table1_row1();
        assert!(matches!(
            calibrate_time_constant(0.0, CircuitTopology::PairFig1b, LobeSide::Pot, &p),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            calibrate_time_constant(1e6, CircuitTopology::PairFig1b, LobeSide::Pot, &p),
            Err(Error::Range(_))
        ));
    }
}
