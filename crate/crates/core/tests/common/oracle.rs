//! Brute-force nearest-spike enumeration, independent of the event-driven code.
//!
//! Every spike looks back over the full other train (and its own train for the
//! triplet terms) to find its nearest predecessor. Pre spikes see only post
//! spikes strictly earlier; post spikes also see a pre spike at the same time.

#![allow(dead_code)]

pub struct Pair {
    pub a_plus: f64,
    pub a_minus: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
}

pub struct Triplet {
    pub a2_plus: f64,
    pub a2_minus: f64,
    pub a3_plus: f64,
    pub a3_minus: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
    pub tau_x: f64,
    pub tau_y: f64,
}

fn latest(times: &[f64], t: f64, inclusive: bool) -> Option<f64> {
    let mut best: Option<f64> = None;
    for &s in times {
        let ok = if inclusive { s <= t } else { s < t };
        if ok && best.is_none_or(|b| s > b) {
            best = Some(s);
        }
    }
    best
}

fn decay(last: Option<f64>, t: f64, tau: f64) -> f64 {
    last.map_or(0.0, |s| (-(t - s) / tau).exp())
}

pub fn pair(pre: &[f64], post: &[f64], p: &Pair) -> f64 {
    let mut total = 0.0;
    for &t in post {
        total += p.a_plus * decay(latest(pre, t, true), t, p.tau_plus);
    }
    for &t in pre {
        total -= p.a_minus * decay(latest(post, t, false), t, p.tau_minus);
    }
    total
}

pub fn triplet(pre: &[f64], post: &[f64], p: &Triplet) -> f64 {
    let mut total = 0.0;
    for &t in post {
        let r1 = decay(latest(pre, t, true), t, p.tau_plus);
        let o2 = decay(latest(post, t, false), t, p.tau_y);
        total += r1 * (p.a2_plus + p.a3_plus * o2);
    }
    for &t in pre {
        let o1 = decay(latest(post, t, false), t, p.tau_minus);
        let r2 = decay(latest(pre, t, false), t, p.tau_x);
        total -= o1 * (p.a2_minus + p.a3_minus * r2);
    }
    total
}
