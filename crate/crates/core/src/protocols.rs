//! Spike trains for the pairing, triplet and quadruplet protocols.
//!
//! Every protocol is a group of spikes repeated `reps` times with period
//! `1/rho`. Within a group the earliest spike sits at the group onset `k/rho`,
//! so all trains start at t = 0 regardless of the sign of the delays.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::train::SpikeTrain;

pub const DEFAULT_REPS: usize = 60;
pub const DEFAULT_RHO: f64 = 1.0;

/// Declarative protocol description. All times in seconds, `rho` in Hz.
///
/// Triplet delays follow the usual sign convention, both relative to the
/// middle spike: for pre-post-pre `dt1 = t_post - t_pre1` and
/// `dt2 = t_post - t_pre2`; for post-pre-post `dt1 = t_post1 - t_pre` and
/// `dt2 = t_post2 - t_pre`. A quadruplet is a post-pre pair with delay `-dt`
/// and a pre-post pair with delay `+dt` whose midpoints are `t_sep` apart
/// (pre-post midpoint minus post-pre midpoint).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ProtocolSpec {
    Pairing { dt: f64, rho: f64, reps: usize },
    TripletPrePostPre { dt1: f64, dt2: f64, rho: f64, reps: usize },
    TripletPostPrePost { dt1: f64, dt2: f64, rho: f64, reps: usize },
    Quadruplet { dt: f64, t_sep: f64, rho: f64, reps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Pairing,
    PrePostPre,
    PostPrePost,
    Quadruplet,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Pairing => "pairing",
            ProtocolKind::PrePostPre => "pre_post_pre",
            ProtocolKind::PostPrePost => "post_pre_post",
            ProtocolKind::Quadruplet => "quadruplet",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "pairing" | "pair" => Some(ProtocolKind::Pairing),
            "pre_post_pre" | "triplet_pre_post_pre" => Some(ProtocolKind::PrePostPre),
            "post_pre_post" | "triplet_post_pre_post" => Some(ProtocolKind::PostPrePost),
            "quadruplet" => Some(ProtocolKind::Quadruplet),
            _ => None,
        }
    }
}

impl ProtocolSpec {
    pub fn pairing(dt: f64, rho: f64) -> Self {
        ProtocolSpec::Pairing {
            dt,
            rho,
            reps: DEFAULT_REPS,
        }
    }

    pub fn kind(&self) -> ProtocolKind {
        match self {
            ProtocolSpec::Pairing { .. } => ProtocolKind::Pairing,
            ProtocolSpec::TripletPrePostPre { .. } => ProtocolKind::PrePostPre,
            ProtocolSpec::TripletPostPrePost { .. } => ProtocolKind::PostPrePost,
            ProtocolSpec::Quadruplet { .. } => ProtocolKind::Quadruplet,
        }
    }

    pub fn rho(&self) -> f64 {
        match *self {
            ProtocolSpec::Pairing { rho, .. }
            | ProtocolSpec::TripletPrePostPre { rho, .. }
            | ProtocolSpec::TripletPostPrePost { rho, .. }
            | ProtocolSpec::Quadruplet { rho, .. } => rho,
        }
    }

    pub fn reps(&self) -> usize {
        match *self {
            ProtocolSpec::Pairing { reps, .. }
            | ProtocolSpec::TripletPrePostPre { reps, .. }
            | ProtocolSpec::TripletPostPrePost { reps, .. }
            | ProtocolSpec::Quadruplet { reps, .. } => reps,
        }
    }

    /// Spike offsets of one group relative to its onset, pre then post.
    fn group(&self) -> (Vec<f64>, Vec<f64>) {
        let (pre, post) = match *self {
            ProtocolSpec::Pairing { dt, .. } => (vec![0.0], vec![dt]),
            ProtocolSpec::TripletPrePostPre { dt1, dt2, .. } => (vec![-dt1, -dt2], vec![0.0]),
            ProtocolSpec::TripletPostPrePost { dt1, dt2, .. } => (vec![0.0], vec![dt1, dt2]),
            ProtocolSpec::Quadruplet { dt, t_sep, .. } => {
                let h = 0.5 * dt;
                // post-pre pair centred on 0, pre-post pair centred on t_sep
                (vec![h, t_sep - h], vec![-h, t_sep + h])
            }
        };
        let onset = pre.iter().chain(&post).copied().fold(f64::INFINITY, f64::min);
        let shift = |v: Vec<f64>| {
            let mut v: Vec<f64> = v.into_iter().map(|t| t - onset).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        (shift(pre), shift(post))
    }

    pub fn validate(&self) -> Result<()> {
        let rho = self.rho();
        if !rho.is_finite() || rho <= 0.0 {
            return Err(Error::Validation(format!("rho must be > 0, got {rho}")));
        }
        if self.reps() == 0 {
            return Err(Error::Validation("reps must be >= 1".into()));
        }
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("{name} must be finite, got {v}")))
            }
        };
        match *self {
            ProtocolSpec::Pairing { dt, .. } => finite("dt", dt)?,
            ProtocolSpec::TripletPrePostPre { dt1, dt2, .. } => {
                finite("dt1", dt1)?;
                finite("dt2", dt2)?;
                if dt1 < 0.0 || dt2 > 0.0 || dt1 == dt2 {
                    return Err(Error::Validation(format!(
                        "pre-post-pre needs dt1 >= 0 >= dt2 with two distinct pre spikes, got dt1={dt1}, dt2={dt2}"
                    )));
                }
            }
            ProtocolSpec::TripletPostPrePost { dt1, dt2, .. } => {
                finite("dt1", dt1)?;
                finite("dt2", dt2)?;
                if dt1 > 0.0 || dt2 < 0.0 || dt1 == dt2 {
                    return Err(Error::Validation(format!(
                        "post-pre-post needs dt1 <= 0 <= dt2 with two distinct post spikes, got dt1={dt1}, dt2={dt2}"
                    )));
                }
            }
            ProtocolSpec::Quadruplet { dt, t_sep, .. } => {
                finite("dt", dt)?;
                finite("t_sep", t_sep)?;
                if dt <= 0.0 {
                    return Err(Error::Validation(format!("quadruplet dt must be > 0, got {dt}")));
                }
                if t_sep.abs() <= dt {
                    return Err(Error::Validation(format!(
                        "quadruplet pairs interleave: |T| = {} must exceed dt = {dt}",
                        t_sep.abs()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Total duration covered by one group.
    pub fn span(&self) -> f64 {
        let (pre, post) = self.group();
        pre.iter().chain(&post).copied().fold(0.0, f64::max)
    }
}

/// Builds the pre- and post-synaptic trains of a protocol.
pub fn build_trains(spec: &ProtocolSpec) -> Result<(SpikeTrain, SpikeTrain)> {
    spec.validate()?;
    let period = 1.0 / spec.rho();
    let reps = spec.reps();
    let (pre_g, post_g) = spec.group();
    let span = pre_g.iter().chain(&post_g).copied().fold(0.0, f64::max);
    let mut pre = Vec::with_capacity(reps * pre_g.len());
    let mut post = Vec::with_capacity(reps * post_g.len());
    let mut last_end = f64::NEG_INFINITY;
    for k in 0..reps {
        let onset = k as f64 * period;
        if onset <= last_end || (reps == 1 && span >= period) {
            return Err(Error::Protocol {
                rep: k,
                msg: format!(
                    "group span {span} s does not fit in the repetition period {period} s"
                ),
            });
        }
        pre.extend(pre_g.iter().map(|t| onset + t));
        post.extend(post_g.iter().map(|t| onset + t));
        last_end = onset + span;
    }
    Ok((SpikeTrain::new(pre)?, SpikeTrain::new(post)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const MS: f64 = 1e-3;

    #[test]
    fn pairing_layout() {
        let (pre, post) = build_trains(&ProtocolSpec::pairing(10.0 * MS, 1.0)).unwrap();
        assert_eq!(pre.len(), 60);
        assert_eq!(post.len(), 60);
        assert_eq!(pre.times()[2], 2.0);
        assert_abs_diff_eq!(post.times()[1], 1.01, epsilon = 1e-12);
    }

    #[test]
    fn negative_pairing_starts_with_post() {
        let (pre, post) = build_trains(&ProtocolSpec::pairing(-10.0 * MS, 1.0)).unwrap();
        assert_eq!(post.times()[0], 0.0);
        assert_abs_diff_eq!(pre.times()[0], 0.01, epsilon = 1e-15);
    }

    #[test]
    fn single_rep() {
        let spec = ProtocolSpec::Pairing {
            dt: 5.0 * MS,
            rho: 1.0,
            reps: 1,
        };
        let (pre, post) = build_trains(&spec).unwrap();
        assert_eq!((pre.len(), post.len()), (1, 1));
    }

    #[test]
    fn quadruplet_recovers_t() {
        let spec = ProtocolSpec::Quadruplet {
            dt: 5.0 * MS,
            t_sep: 20.0 * MS,
            rho: 1.0,
            reps: 1,
        };
        let (pre, post) = build_trains(&spec).unwrap();
        let (p, q) = (pre.times(), post.times());
        // post1 < pre1 < pre2 < post2 for T > 0
        assert_abs_diff_eq!(q[0] - p[0], -5.0 * MS, epsilon = 1e-12);
        assert_abs_diff_eq!(q[1] - p[1], 5.0 * MS, epsilon = 1e-12);
        let t = 0.5 * (p[1] + q[1]) - 0.5 * (p[0] + q[0]);
        assert_abs_diff_eq!(t, 20.0 * MS, epsilon = 1e-12);
    }

    #[test]
    fn overlapping_groups_are_rejected() {
        let spec = ProtocolSpec::Pairing {
            dt: 30.0 * MS,
            rho: 50.0,
            reps: 60,
        };
        match build_trains(&spec) {
            Err(Error::Protocol { rep, .. }) => assert_eq!(rep, 1),
            other => panic!("expected protocol error, got {other:?}"),
        }
        let single = ProtocolSpec::Pairing {
            dt: 30.0 * MS,
            rho: 50.0,
            reps: 1,
        };
        assert!(matches!(build_trains(&single), Err(Error::Protocol { rep: 0, .. })));
    }

    #[test]
    fn invalid_specs() {
        assert!(ProtocolSpec::pairing(0.01, 0.0).validate().is_err());
        let quad = ProtocolSpec::Quadruplet {
            dt: 5.0 * MS,
            t_sep: 5.0 * MS,
            rho: 1.0,
            reps: 60,
        };
        assert!(quad.validate().is_err());
        let trip = ProtocolSpec::TripletPrePostPre {
            dt1: -5.0 * MS,
            dt2: 5.0 * MS,
            rho: 1.0,
            reps: 60,
        };
        assert!(trip.validate().is_err());
    }
}
