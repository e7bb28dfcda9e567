#![allow(dead_code)]

use carfollow::sim::{SimTrace, TraceRow};

/// Every logged signal of a row, `a_F` as 0 when absent.
pub fn signals(r: &TraceRow) -> [f64; 12] {
    [
        r.h,
        r.h_des,
        r.v_p,
        r.v_f,
        r.v_des,
        r.s,
        r.a_des,
        r.a_fb,
        r.a_fb_bar,
        r.a_cf,
        r.u,
        r.a_f.unwrap_or(0.0),
    ]
}

/// Sup-norm over all signals between a run and one at half the step.
pub fn refinement_gap(coarse: &SimTrace, fine: &SimTrace) -> f64 {
    assert_eq!(fine.rows.len(), 2 * coarse.rows.len() - 1);
    coarse
        .rows
        .iter()
        .enumerate()
        .flat_map(|(i, r)| {
            let (a, b) = (signals(r), signals(&fine.rows[2 * i]));
            (0..a.len()).map(move |k| (a[k] - b[k]).abs())
        })
        .fold(0.0, f64::max)
}

/// Sup-norm of `f` between two traces sampled on the same grid.
pub fn sup_gap(a: &SimTrace, b: &SimTrace, f: impl Fn(&TraceRow) -> f64) -> f64 {
    assert_eq!(a.rows.len(), b.rows.len());
    a.rows.iter().zip(&b.rows).map(|(x, y)| (f(x) - f(y)).abs()).fold(0.0, f64::max)
}

/// Earliest time after which `|v̂| < dv` and `|ĥ| < dh` hold to the end.
pub fn settle_time(trace: &SimTrace, dv: f64, dh: f64) -> Option<f64> {
    let last_bad = trace
        .rows
        .iter()
        .rposition(|r| r.v_hat().abs() >= dv || r.h_hat().abs() >= dh);
    match last_bad {
        None => Some(0.0),
        Some(i) if i + 1 < trace.rows.len() => Some(trace.rows[i + 1].t),
        Some(_) => None,
    }
}

/// Half the peak-to-peak excursion of `f` over rows with `t >= from`.
pub fn half_swing(trace: &SimTrace, from: f64, f: impl Fn(&TraceRow) -> f64) -> f64 {
    let (lo, hi) = trace
        .rows
        .iter()
        .filter(|r| r.t >= from)
        .map(&f)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    0.5 * (hi - lo)
}

/// Extremes of `a_des` after `t = 2` s while `|ĥ| > 5` m.
pub fn comfort_window(trace: &SimTrace) -> (f64, f64) {
    trace
        .rows
        .iter()
        .filter(|r| r.t >= 2.0 && r.h_hat().abs() > 5.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.a_des), hi.max(r.a_des)))
}

/// Last time `|v̂|` or `|ĥ|` grew by more than rounding, or any
/// non-negligible sign change of `S`, whichever is later.
pub fn monotone_from(trace: &SimTrace) -> f64 {
    const NOISE: f64 = 1e-12;
    let mut from = 0.0;
    for w in trace.rows.windows(2) {
        let grew = w[1].v_hat().abs() > w[0].v_hat().abs() + NOISE || w[1].h_hat().abs() > w[0].h_hat().abs() + NOISE;
        let flipped = w[0].s * w[1].s < 0.0 && w[0].s.abs().max(w[1].s.abs()) > 1e-9;
        if grew || flipped {
            from = w[1].t;
        }
    }
    from
}
