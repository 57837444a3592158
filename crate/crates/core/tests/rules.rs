mod common;

use common::oracle;
use proptest::prelude::*;
use tstdp_core::rules::{
    pair_delta_w, run_pair_stdp, run_triplet_stdp, Channel, InteractionScheme, PairParams, TraceState,
    TripletParams,
};
use tstdp_core::SpikeTrain;

const NS: InteractionScheme = InteractionScheme::NearestSpike;

/// Up to 20 spikes on a 0.5 ms grid, so pre/post ties occur.
fn train() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(0u32..400, 0..=20).prop_map(|s| s.into_iter().map(|k| k as f64 * 5e-4).collect())
}

/// Times in multiples of 2^-10 s, so shifting by another such multiple is exact.
fn dyadic_train() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(0u32..256, 0..=20).prop_map(|s| s.into_iter().map(|k| k as f64 / 1024.0).collect())
}

fn pair_params() -> impl Strategy<Value = PairParams> {
    (0.0..1.0f64, 0.0..1.0f64, 1e-3..0.2f64, 1e-3..0.2f64).prop_map(|(a_plus, a_minus, tau_plus, tau_minus)| {
        PairParams {
            a_plus,
            a_minus,
            tau_plus,
            tau_minus,
        }
    })
}

fn triplet_params() -> impl Strategy<Value = TripletParams> {
    (
        prop::array::uniform4(0.0..1.0f64),
        prop::array::uniform4(1e-3..0.5f64),
    )
        .prop_map(|(a, t)| TripletParams {
            a2_plus: a[0],
            a2_minus: a[1],
            a3_plus: a[2],
            a3_minus: a[3],
            tau_plus: t[0],
            tau_minus: t[1],
            tau_x: t[2],
            tau_y: t[3],
        })
}

fn st(v: &[f64]) -> SpikeTrain {
    SpikeTrain::new(v.to_vec()).unwrap()
}

#[test]
fn isolated_pair_follows_closed_form() {
    let p = PairParams {
        a_plus: 0.8,
        a_minus: 0.4,
        tau_plus: 16.8e-3,
        tau_minus: 33.7e-3,
    };
    let out = run_pair_stdp(&st(&[0.1]), &st(&[0.11]), &p, NS).unwrap();
    assert!((out.total - 0.8 * (-0.01f64 / 16.8e-3).exp()).abs() < 1e-15);
    let out = run_pair_stdp(&st(&[0.11]), &st(&[0.1]), &p, NS).unwrap();
    assert!((out.total + 0.4 * (-0.01f64 / 33.7e-3).exp()).abs() < 1e-15);
    assert_eq!(pair_delta_w(0.0, &p).unwrap(), 0.8);
}

#[test]
fn nearest_spike_ignores_older_partners() {
    let p = PairParams {
        a_plus: 1.0,
        a_minus: 1.0,
        tau_plus: 0.02,
        tau_minus: 0.02,
    };
    // second pre shadows the first for the post spike
    let out = run_pair_stdp(&st(&[0.0, 0.01]), &st(&[0.02]), &p, NS).unwrap();
    assert!((out.total - (-0.5f64).exp()).abs() < 1e-15);
    let all = run_pair_stdp(&st(&[0.0, 0.01]), &st(&[0.02]), &p, InteractionScheme::AllToAll).unwrap();
    assert!((all.total - (-0.5f64).exp() - (-1.0f64).exp()).abs() < 1e-15);
}

#[test]
fn triplet_term_reads_previous_post() {
    let p = TripletParams {
        a2_plus: 0.0,
        a2_minus: 0.0,
        a3_plus: 1.0,
        a3_minus: 0.0,
        tau_plus: 0.02,
        tau_minus: 0.02,
        tau_x: 0.1,
        tau_y: 0.04,
    };
    // post-pre-post with 10 ms gaps; only the second post potentiates
    let out = run_triplet_stdp(&st(&[0.01]), &st(&[0.0, 0.02]), &p, NS).unwrap();
    let expect = (-0.5f64).exp() * (-0.5f64).exp();
    assert!((out.total - expect).abs() < 1e-15);
    assert_eq!(out.events[0].dw, 0.0);
}

proptest! {
    #[test]
    fn pair_matches_oracle(pre in train(), post in train(), p in pair_params()) {
        let got = run_pair_stdp(&st(&pre), &st(&post), &p, NS).unwrap().total;
        let o = oracle::Pair { a_plus: p.a_plus, a_minus: p.a_minus, tau_plus: p.tau_plus, tau_minus: p.tau_minus };
        prop_assert!((got - oracle::pair(&pre, &post, &o)).abs() < 1e-9);
    }

    #[test]
    fn triplet_matches_oracle(pre in train(), post in train(), p in triplet_params()) {
        let got = run_triplet_stdp(&st(&pre), &st(&post), &p, NS).unwrap().total;
        let o = oracle::Triplet {
            a2_plus: p.a2_plus, a2_minus: p.a2_minus, a3_plus: p.a3_plus, a3_minus: p.a3_minus,
            tau_plus: p.tau_plus, tau_minus: p.tau_minus, tau_x: p.tau_x, tau_y: p.tau_y,
        };
        prop_assert!((got - oracle::triplet(&pre, &post, &o)).abs() < 1e-9);
    }

    #[test]
    fn zero_triplet_terms_reduce_to_pair(pre in train(), post in train(), p in pair_params()) {
        let pair = run_pair_stdp(&st(&pre), &st(&post), &p, NS).unwrap().total;
        let trip = run_triplet_stdp(&st(&pre), &st(&post), &TripletParams::from_pair(&p), NS).unwrap().total;
        prop_assert!((pair - trip).abs() <= 1e-12 * pair.abs().max(1.0));
    }

    #[test]
    fn time_translation_invariance(pre in dyadic_train(), post in dyadic_train(), p in triplet_params(), k in 0u32..1 << 17) {
        let shift = k as f64 / 1024.0;
        let a = run_triplet_stdp(&st(&pre), &st(&post), &p, NS).unwrap().total;
        let pre2 = st(&pre).shifted(shift).unwrap();
        let post2 = st(&post).shifted(shift).unwrap();
        let b = run_triplet_stdp(&pre2, &post2, &p, NS).unwrap().total;
        prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn nearest_spike_traces_stay_below_one(pre in train(), post in train(), p in triplet_params()) {
        let mut events: Vec<(f64, Channel)> = pre.iter().map(|&t| (t, Channel::Pre))
            .chain(post.iter().map(|&t| (t, Channel::Post))).collect();
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut s = TraceState::default();
        for (t, ch) in events {
            s.decay_to(t, &p);
            prop_assert!(s.r1 <= 1.0 && s.r2 <= 1.0 && s.o1 <= 1.0 && s.o2 <= 1.0);
            s.spike(ch, &p, NS);
            prop_assert!(s.r1 <= 1.0 && s.r2 <= 1.0 && s.o1 <= 1.0 && s.o2 <= 1.0);
        }
    }

    #[test]
    fn isolated_pair_sign(p in triplet_params(), dt in 1e-4..0.2f64) {
        prop_assume!(p.a2_plus > 1e-6 && p.a2_minus > 1e-6);
        let ltp = run_triplet_stdp(&st(&[0.0]), &st(&[dt]), &p, NS).unwrap().total;
        let ltd = run_triplet_stdp(&st(&[dt]), &st(&[0.0]), &p, NS).unwrap().total;
        prop_assert!(ltp > 0.0);
        prop_assert!(ltd < 0.0);
    }

    #[test]
    fn pair_delta_w_sign(dt in -1.0..1.0f64, p in pair_params()) {
        let dw = pair_delta_w(dt, &p).unwrap();
        if dt >= 0.0 { prop_assert!(dw >= 0.0) } else { prop_assert!(dw <= 0.0) }
    }
}
