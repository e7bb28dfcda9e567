use carfollow::analysis::{
    amplification_excess, characteristic_roots, linearize, magnitude_m, magnitude_m1, plant_stable, string_margin,
    string_stable,
};
use carfollow::shaping::{wrap, wrap_slope, Shaper};
use carfollow::{ControlLaw, Controller, ControllerParams, Measurement, RangePolicy};
use num_complex::Complex64;
use proptest::prelude::*;

fn table_shaper() -> Shaper {
    let p = ControllerParams::default();
    Shaper::new(p.a_com / p.k2, p.c).unwrap()
}

fn central_difference(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-6 * x.abs().max(1.0);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn wrap_is_odd_and_bounded(x in -1e12f64..1e12) {
        let g = wrap(x).unwrap();
        prop_assert_eq!(wrap(-x).unwrap(), -g);
        prop_assert!(g.abs() <= 1.0);
    }

    #[test]
    fn wrap_is_monotone(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (glo, ghi) = (wrap(lo).unwrap(), wrap(hi).unwrap());
        prop_assert!(ghi >= glo);
        // Strictness is only observable where the increment exceeds rounding.
        if hi.abs().max(lo.abs()) <= 100.0 && hi - lo > 1e-9 {
            prop_assert!(ghi > glo);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn wrap_slope_matches_finite_difference(x in -1e3f64..1e3) {
        let fd = central_difference(|x| wrap(x).unwrap(), x);
        prop_assert!(rel_err(fd, wrap_slope(x).unwrap()) < 1e-5, "x = {}", x);
    }

    #[test]
    fn shaper_slope_matches_finite_difference(x in -1e4f64..1e4) {
        let q = table_shaper();
        let fd = central_difference(|x| q.value(x).unwrap(), x);
        prop_assert!(rel_err(fd, q.slope(x).unwrap()) < 1e-5, "x = {}", x);
    }

    #[test]
    fn shaper_inverse_round_trips(x in -1e4f64..1e4) {
        let q = table_shaper();
        let back = q.inverse(q.value(x).unwrap()).unwrap();
        prop_assert!((back - x).abs() <= 1e-8 * x.abs().max(1.0), "x = {}, back = {}", x, back);
    }

    #[test]
    fn shaper_is_odd_and_increasing(x in 0.0f64..1e4, dx in 1e-3f64..10.0, b in 0.05f64..5.0, c in 0.1f64..5.0) {
        let q = Shaper::new(b, c).unwrap();
        prop_assert_eq!(q.value(-x).unwrap(), -q.value(x).unwrap());
        prop_assert!(q.value(x + dx).unwrap() > q.value(x).unwrap());
        prop_assert!(q.slope(x).unwrap() > 0.0);
    }
}

#[test]
fn shaper_asymptote_gap_shrinks() {
    let q = table_shaper();
    let gaps: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&x| (q.value(x).unwrap() - (2.0 * q.b() * x).sqrt()).abs())
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    assert!(gaps[2] < 0.05);
}

fn controller() -> Controller {
    Controller::new(ControllerParams::default(), RangePolicy::PredecessorBased, ControlLaw::Nonlinear).unwrap()
}

fn state() -> impl Strategy<Value = Measurement> {
    (0.1f64..200.0, 0.0f64..40.0, 0.0f64..40.0).prop_map(|(h, v_p, v_f)| Measurement { h, v_p, v_f })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn surface_equals_desired_speed_error(m in state()) {
        let ctl = controller();
        let p = ctl.params();
        let out = ctl.control(&m).unwrap();
        // Independent route: desired speed from the shaped range error, clamped.
        let h_des = p.h0 + p.t_h * m.v_p;
        let v_des = (m.v_p + table_shaper().value(p.k2 * (m.h - h_des)).unwrap()).clamp(0.0, p.v_max);
        prop_assert!((out.s - (v_des - m.v_f)).abs() <= 1e-12 * v_des.abs().max(1.0));
        prop_assert!((out.s - (out.v_des - m.v_f)).abs() <= 1e-12 * out.v_des.abs().max(1.0));
    }

    #[test]
    fn feedforward_stays_in_clamp_range(m in state()) {
        let out = controller().control(&m).unwrap();
        let p = ControllerParams::default();
        prop_assert!(out.a_cf <= 0.0 && out.a_cf >= p.a_min, "a_cf = {}", out.a_cf);
    }

    #[test]
    fn feedback_saturation_is_bounded(m in state()) {
        let out = controller().control(&m).unwrap();
        prop_assert!((out.a_fb - out.a_fb_bar).abs() <= ControllerParams::default().a_sat);
        prop_assert!((out.a_des - (out.a_cf + out.a_fb)).abs() == 0.0);
    }

    #[test]
    fn surface_sign_follows_errors(m in (0.1f64..200.0, 0.0f64..35.0, 0.0f64..35.0)
        .prop_map(|(h, v_p, v_f)| Measurement { h, v_p, v_f }))
    {
        let out = controller().control(&m).unwrap();
        if out.v_hat < 0.0 && out.h_hat < 0.0 {
            prop_assert!(out.s < 0.0);
        }
        if out.v_hat > 0.0 && out.h_hat > 0.0 {
            prop_assert!(out.s > 0.0);
        }
        // Clamping never flips the sign of the unclamped surface.
        prop_assert!(out.s * out.s_hat >= 0.0);
    }

    #[test]
    fn small_errors_match_linear_law(vh in -1.0f64..1.0, hh in -1.0f64..1.0) {
        let delta = 1e-3;
        let p = ControllerParams::default();
        let (v_hat, h_hat) = (vh * delta, hh * delta / p.k2);
        let v_p = 20.0;
        let m = Measurement { h: p.h0 + p.t_h * v_p + h_hat, v_p, v_f: v_p - v_hat };
        let out = controller().control(&m).unwrap();
        let lin = (p.k1 + p.k2) * v_hat + p.k1 * p.k2 * h_hat;
        prop_assert!((out.a_fb - lin).abs() <= 1.0 * delta * delta, "remainder {}", (out.a_fb - lin).abs());
    }
}

fn gains() -> impl Strategy<Value = (f64, f64)> {
    (1e-3f64..20.0, 1e-3f64..20.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn eigenvalues_are_minus_gains((k1, k2) in gains(), t_h in 0.05f64..5.0) {
        let sys = linearize(k1, k2, t_h).unwrap();
        let mut re: Vec<f64> = sys.eigenvalues().iter().map(|z| { assert_eq!(z.im, 0.0); z.re }).collect();
        re.sort_by(f64::total_cmp);
        let mut want = [-k1, -k2];
        want.sort_by(f64::total_cmp);
        for (r, w) in re.iter().zip(want) {
            prop_assert!((r - w).abs() <= 1e-12 * w.abs().max(1.0));
        }
    }

    #[test]
    fn plant_stability_matches_root_signs(k1 in -10.0f64..10.0, k2 in -10.0f64..10.0) {
        let roots = characteristic_roots(k1, k2);
        prop_assert_eq!(plant_stable(k1, k2), roots.iter().all(|z| z.re < 0.0));
    }

    #[test]
    fn excess_polynomial_matches_transfer((k1, k2) in gains(), t_h in 0.05f64..5.0, lw in -3.0f64..3.0) {
        let w = 10f64.powf(lw);
        let s = Complex64::new(0.0, w);
        let sys = linearize(k1, k2, t_h).unwrap();
        let den = (s * s + (k1 + k2) * s + k1 * k2).norm_sqr();
        let via_transfer = (sys.speed_transfer(s).norm_sqr() - 1.0) * den;
        let closed = amplification_excess(k1, k2, t_h, w);
        let scale = den.max(closed.abs()).max(1e-300);
        prop_assert!((via_transfer - closed).abs() <= 1e-9 * scale, "{} vs {}", via_transfer, closed);
        let m = magnitude_m(k1, k2, t_h, w);
        prop_assert!((m - sys.speed_transfer(s).norm()).abs() <= 1e-9 * m.max(1.0));
    }

    #[test]
    fn surface_gain_is_monotone_and_bounded((k1, k2) in gains(), t_h in 0.05f64..5.0, lw in -3.0f64..3.0, step in 1.0001f64..2.0) {
        let w = 10f64.powf(lw);
        let bound = (1.0 - k2 * t_h).abs();
        let (a, b) = (magnitude_m1(k1, k2, t_h, w), magnitude_m1(k1, k2, t_h, w * step));
        prop_assert!(b >= a * (1.0 - 1e-12));
        prop_assert!(b <= bound * (1.0 + 1e-12));
        prop_assert!(magnitude_m(k1, k2, t_h, 0.0) == 1.0);
    }

    #[test]
    fn string_verdict_is_margin_sign((k1, k2) in gains(), t_h in 0.05f64..5.0) {
        prop_assert_eq!(string_stable(k1, k2, t_h).unwrap(), string_margin(k1, k2, t_h) <= 0.0);
    }
}
