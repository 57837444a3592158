//! Ideal pair and triplet STDP rules evaluated over spike trains.
//!
//! Both rules are event driven: pre and post spikes are merged into a single
//! time-ordered stream (pre first on ties) and the weight change is computed
//! at each spike from the detector traces as they were just before that spike.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParamMap;
use crate::train::SpikeTrain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InteractionScheme {
    /// Each spike only sees the immediately preceding spike of each channel;
    /// traces are reset to one instead of accumulating.
    #[default]
    NearestSpike,
    AllToAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    Pre,
    Post,
}

/// Weight change caused by a single spike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightEvent {
    pub time: f64,
    pub channel: Channel,
    pub dw: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RuleOutput {
    pub total: f64,
    pub events: Vec<WeightEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairParams {
    pub a_plus: f64,
    pub a_minus: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
}

impl PairParams {
    pub fn validate(&self) -> Result<()> {
        check_amplitude("a_plus", self.a_plus)?;
        check_amplitude("a_minus", self.a_minus)?;
        check_tau("tau_plus", self.tau_plus)?;
        check_tau("tau_minus", self.tau_minus)
    }

    pub const NAMES: [&'static str; 4] = ["a_plus", "a_minus", "tau_plus", "tau_minus"];

    pub fn from_map(map: &ParamMap) -> Result<Self> {
        let [a_plus, a_minus, tau_plus, tau_minus] = lookup(map, Self::NAMES)?;
        Ok(Self {
            a_plus,
            a_minus,
            tau_plus,
            tau_minus,
        })
    }

    pub fn to_map(&self) -> ParamMap {
        to_map(Self::NAMES, [self.a_plus, self.a_minus, self.tau_plus, self.tau_minus])
    }
}

fn lookup<const N: usize>(map: &ParamMap, names: [&str; N]) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    for (slot, name) in out.iter_mut().zip(names) {
        *slot = *map
            .get(name)
            .ok_or_else(|| Error::InvalidParams(format!("missing parameter `{name}`")))?;
    }
    Ok(out)
}

fn to_map<const N: usize>(names: [&str; N], values: [f64; N]) -> ParamMap {
    names.iter().map(|n| n.to_string()).zip(values).collect()
}

/// Which of the triplet terms are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TripletVariant {
    #[default]
    Full,
    /// Pair potentiation and triplet depression removed.
    MinimalVisualCortex,
    /// Triplet depression removed.
    MinimalHippocampal,
}

impl TripletVariant {
    /// Amplitude names that the variant pins to zero.
    pub fn zeroed(self) -> &'static [&'static str] {
        match self {
            TripletVariant::Full => &[],
            TripletVariant::MinimalVisualCortex => &["a2_plus", "a3_minus"],
            TripletVariant::MinimalHippocampal => &["a3_minus"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripletParams {
    pub a2_plus: f64,
    pub a2_minus: f64,
    pub a3_plus: f64,
    pub a3_minus: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
    pub tau_x: f64,
    pub tau_y: f64,
}

impl TripletParams {
    /// Triplet parameters whose triplet amplitudes are zero.
    pub fn from_pair(p: &PairParams) -> Self {
        Self {
            a2_plus: p.a_plus,
            a2_minus: p.a_minus,
            a3_plus: 0.0,
            a3_minus: 0.0,
            tau_plus: p.tau_plus,
            tau_minus: p.tau_minus,
            tau_x: 1.0,
            tau_y: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_amplitude("a2_plus", self.a2_plus)?;
        check_amplitude("a2_minus", self.a2_minus)?;
        check_amplitude("a3_plus", self.a3_plus)?;
        check_amplitude("a3_minus", self.a3_minus)?;
        check_tau("tau_plus", self.tau_plus)?;
        check_tau("tau_minus", self.tau_minus)?;
        check_tau("tau_x", self.tau_x)?;
        check_tau("tau_y", self.tau_y)
    }

    pub const NAMES: [&'static str; 8] = [
        "a2_plus",
        "a2_minus",
        "a3_plus",
        "a3_minus",
        "tau_plus",
        "tau_minus",
        "tau_x",
        "tau_y",
    ];

    pub fn from_map(map: &ParamMap) -> Result<Self> {
        let [a2_plus, a2_minus, a3_plus, a3_minus, tau_plus, tau_minus, tau_x, tau_y] =
            lookup(map, Self::NAMES)?;
        Ok(Self {
            a2_plus,
            a2_minus,
            a3_plus,
            a3_minus,
            tau_plus,
            tau_minus,
            tau_x,
            tau_y,
        })
    }

    pub fn to_map(&self) -> ParamMap {
        to_map(
            Self::NAMES,
            [
                self.a2_plus,
                self.a2_minus,
                self.a3_plus,
                self.a3_minus,
                self.tau_plus,
                self.tau_minus,
                self.tau_x,
                self.tau_y,
            ],
        )
    }

    pub fn validate_variant(&self, variant: TripletVariant) -> Result<()> {
        self.validate()?;
        for name in variant.zeroed() {
            let value = match *name {
                "a2_plus" => self.a2_plus,
                _ => self.a3_minus,
            };
            if value != 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{variant:?} requires {name} = 0, got {value}"
                )));
            }
        }
        Ok(())
    }
}

fn check_amplitude(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidParams(format!("{name} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

fn check_tau(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::InvalidParams(format!("{name} must be finite and > 0, got {v}")));
    }
    Ok(())
}

/// Pair-rule weight change for `dt = t_post - t_pre`; `dt = 0` potentiates.
pub fn pair_delta_w(dt: f64, p: &PairParams) -> Result<f64> {
    if !dt.is_finite() {
        return Err(Error::Domain(format!("dt must be finite, got {dt}")));
    }
    Ok(if dt >= 0.0 {
        p.a_plus * (-dt / p.tau_plus).exp()
    } else {
        -p.a_minus * (dt / p.tau_minus).exp()
    })
}

/// Merged spike stream, pre before post on equal times.
pub(crate) fn merged_events(pre: &SpikeTrain, post: &SpikeTrain) -> Vec<(f64, Channel)> {
    let (a, b) = (pre.times(), post.times());
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] <= b[j]) {
            out.push((a[i], Channel::Pre));
            i += 1;
        } else {
            out.push((b[j], Channel::Post));
            j += 1;
        }
    }
    out
}

/// Pair rule applied spike by spike.
///
/// Under [`InteractionScheme::NearestSpike`] a post spike only pairs with the
/// latest earlier pre spike and a pre spike only with the latest earlier post
/// spike. Under [`InteractionScheme::AllToAll`] every earlier spike of the
/// other channel contributes.
pub fn run_pair_stdp(
    pre: &SpikeTrain,
    post: &SpikeTrain,
    p: &PairParams,
    scheme: InteractionScheme,
) -> Result<RuleOutput> {
    p.validate()?;
    let events = merged_events(pre, post);
    let mut out = RuleOutput {
        total: 0.0,
        events: Vec::with_capacity(events.len()),
    };
    match scheme {
        InteractionScheme::NearestSpike => {
            let mut last_pre: Option<f64> = None;
            let mut last_post: Option<f64> = None;
            for (t, ch) in events {
                let dw = match ch {
                    Channel::Pre => {
                        let dw = match last_post {
                            Some(tp) => pair_delta_w(tp - t, p)?,
                            None => 0.0,
                        };
                        last_pre = Some(t);
                        dw
                    }
                    Channel::Post => {
                        let dw = match last_pre {
                            Some(tp) => pair_delta_w(t - tp, p)?,
                            None => 0.0,
                        };
                        last_post = Some(t);
                        dw
                    }
                };
                out.push(t, ch, dw);
            }
        }
        InteractionScheme::AllToAll => {
            let (mut x, mut y, mut t_last) = (0.0, 0.0, 0.0);
            for (t, ch) in events {
                let elapsed = t - t_last;
                x *= (-elapsed / p.tau_plus).exp();
                y *= (-elapsed / p.tau_minus).exp();
                t_last = t;
                let dw = match ch {
                    Channel::Pre => {
                        x += 1.0;
                        -p.a_minus * y
                    }
                    Channel::Post => {
                        y += 1.0;
                        p.a_plus * x
                    }
                };
                out.push(t, ch, dw);
            }
        }
    }
    Ok(out)
}

impl RuleOutput {
    fn push(&mut self, time: f64, channel: Channel, dw: f64) {
        self.total += dw;
        self.events.push(WeightEvent { time, channel, dw });
    }
}

/// Detector traces of the triplet rule.
///
/// `r1`/`r2` are driven by pre spikes and decay with `tau_plus`/`tau_x`;
/// `o1`/`o2` are driven by post spikes and decay with `tau_minus`/`tau_y`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceState {
    pub r1: f64,
    pub r2: f64,
    pub o1: f64,
    pub o2: f64,
    pub t_last: f64,
}

impl TraceState {
    pub fn decay_to(&mut self, t: f64, p: &TripletParams) {
        let elapsed = t - self.t_last;
        if elapsed > 0.0 {
            self.r1 *= (-elapsed / p.tau_plus).exp();
            self.r2 *= (-elapsed / p.tau_x).exp();
            self.o1 *= (-elapsed / p.tau_minus).exp();
            self.o2 *= (-elapsed / p.tau_y).exp();
        }
        self.t_last = t;
    }

    fn bump(trace: &mut f64, scheme: InteractionScheme) {
        match scheme {
            InteractionScheme::NearestSpike => *trace = 1.0,
            InteractionScheme::AllToAll => *trace += 1.0,
        }
    }

    /// Weight change of a spike on `ch` at the current time, then the trace update.
    pub fn spike(&mut self, ch: Channel, p: &TripletParams, scheme: InteractionScheme) -> f64 {
        match ch {
            Channel::Pre => {
                let dw = -self.o1 * (p.a2_minus + p.a3_minus * self.r2);
                Self::bump(&mut self.r1, scheme);
                Self::bump(&mut self.r2, scheme);
                dw
            }
            Channel::Post => {
                let dw = self.r1 * (p.a2_plus + p.a3_plus * self.o2);
                Self::bump(&mut self.o1, scheme);
                Self::bump(&mut self.o2, scheme);
                dw
            }
        }
    }
}

/// Trace-based triplet rule.
pub fn run_triplet_stdp(
    pre: &SpikeTrain,
    post: &SpikeTrain,
    p: &TripletParams,
    scheme: InteractionScheme,
) -> Result<RuleOutput> {
    p.validate()?;
    let events = merged_events(pre, post);
    let mut out = RuleOutput {
        total: 0.0,
        events: Vec::with_capacity(events.len()),
    };
    let mut state = TraceState::default();
    if let Some(&(t0, _)) = events.first() {
        state.t_last = t0;
    }
    for (t, ch) in events {
        state.decay_to(t, p);
        let dw = state.spike(ch, p, scheme);
        out.push(t, ch, dw);
    }
    Ok(out)
}

/// Total weight change only; skips the event log.
pub fn triplet_total(
    pre: &SpikeTrain,
    post: &SpikeTrain,
    p: &TripletParams,
    scheme: InteractionScheme,
) -> f64 {
    let mut state = TraceState::default();
    let mut total = 0.0;
    let mut first = true;
    for (t, ch) in merged_events(pre, post) {
        if first {
            state.t_last = t;
            first = false;
        }
        state.decay_to(t, p);
        total += state.spike(ch, p, scheme);
    }
    total
}
