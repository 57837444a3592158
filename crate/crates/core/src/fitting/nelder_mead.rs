//! Nelder–Mead on the unit cube with a hard evaluation budget.
//!
//! Trial points are projected back into `[0, 1]^d`. When the simplex
//! collapses before the budget is spent, it is rebuilt around the best vertex
//! with a smaller step. The run is a deterministic function of the start
//! point, so a run with a larger budget replays a smaller one exactly and
//! then continues.

const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const RHO: f64 = 0.5;
const SIGMA: f64 = 0.5;
const INITIAL_STEP: f64 = 0.1;
const MIN_STEP: f64 = 1e-6;
const COLLAPSE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
}

struct Budgeted<'a, F> {
    f: &'a mut F,
    left: usize,
    used: usize,
    best: Option<(Vec<f64>, f64)>,
}

impl<F: FnMut(&[f64]) -> f64> Budgeted<'_, F> {
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.left == 0 {
            return None;
        }
        self.left -= 1;
        self.used += 1;
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if self.best.as_ref().is_none_or(|(_, b)| v < *b) {
            self.best = Some((x.to_vec(), v));
        }
        Some(v)
    }
}

fn project(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

fn toward(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect();
    project(&mut out);
    out
}

/// Minimizes `f` over `[0, 1]^d` from `x0` using at most `budget` calls.
/// Returns `None` only when `budget == 0`.
pub fn minimize<F>(mut f: F, x0: &[f64], budget: usize) -> Option<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x0 = x0.to_vec();
    project(&mut x0);
    let mut b = Budgeted {
        f: &mut f,
        left: budget,
        used: 0,
        best: None,
    };
    let f0 = b.eval(&x0)?;
    let d = x0.len();
    let mut step = INITIAL_STEP;
    let mut center = (x0, f0);
    'outer: while d > 0 && step >= MIN_STEP {
        let mut simplex = vec![center.clone()];
        for i in 0..d {
            let mut x = center.0.clone();
            x[i] += if x[i] + step <= 1.0 { step } else { -step };
            let Some(v) = b.eval(&x) else { break 'outer };
            simplex.push((x, v));
        }
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex.iter().map(|s| dist(&s.0, &simplex[0].0)).fold(0.0, f64::max);
            if spread < step * COLLAPSE {
                break;
            }
            let mut centroid = vec![0.0; d];
            for (x, _) in &simplex[..d] {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c += v / d as f64;
                }
            }
            let worst = simplex[d].clone();
            let xr = toward(&centroid, &worst.0, -ALPHA);
            let Some(fr) = b.eval(&xr) else { break 'outer };
            if fr < simplex[0].1 {
                let xe = toward(&centroid, &worst.0, -GAMMA);
                let Some(fe) = b.eval(&xe) else { break 'outer };
                simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[d - 1].1 {
                simplex[d] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < worst.1 {
                let xc = toward(&centroid, &xr, RHO);
                let Some(fc) = b.eval(&xc) else { break 'outer };
                (xc, fc)
            } else {
                let xc = toward(&centroid, &worst.0, RHO);
                let Some(fc) = b.eval(&xc) else { break 'outer };
                (xc, fc)
            };
            if fc < fr.min(worst.1) {
                simplex[d] = (xc, fc);
                continue;
            }
            let best = simplex[0].0.clone();
            for s in simplex.iter_mut().skip(1) {
                let x = toward(&best, &s.0, SIGMA);
                let Some(v) = b.eval(&x) else { break 'outer };
                *s = (x, v);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        center = simplex.swap_remove(0);
        step *= 0.1;
    }
    let used = b.used;
    let (x, f) = b.best.expect("at least one evaluation");
    Some(Minimum {
        x,
        f,
        evaluations: used,
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
