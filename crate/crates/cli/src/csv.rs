//! CSV emission with `%.9g`-style numbers.

use std::fmt::Write as _;

use carfollow::analysis::StabilityGrid;
use carfollow::sim::SimTrace;

pub const TRACE_HEADER: &str = "t,h,h_des,v_P,v_F,v_des,S,a_des,a_fb,a_fb_bar,a_cf,u,a_F";

/// Shortest of fixed or scientific notation with 9 significant digits,
/// trailing zeros removed, exponent as `e±dd`.
pub fn fmt_g(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // Rounding to 9 digits first fixes the decimal exponent.
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn trace_csv(trace: &SimTrace) -> String {
    let mut out = String::with_capacity(160 * (trace.rows.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.rows {
        let cols = [
            r.t, r.h, r.h_des, r.v_p, r.v_f, r.v_des, r.s, r.a_des, r.a_fb, r.a_fb_bar, r.a_cf, r.u,
        ];
        for (i, v) in cols.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&fmt_g(*v));
        }
        out.push(',');
        if let Some(a) = r.a_f {
            out.push_str(&fmt_g(a));
        }
        out.push('\n');
    }
    out
}

pub const SWEEP_HEADER: &str = "t_h,k2,k1,plant_stable,string_stable,k2_star";

/// Rows sorted by `(t_h, k2, k1)`.
pub fn sweep_csv(grids: &[StabilityGrid]) -> String {
    let mut cells: Vec<_> = grids
        .iter()
        .flat_map(|g| g.cells.iter().map(move |c| (c, g.k2_star)))
        .collect();
    cells.sort_by(|(a, _), (b, _)| {
        a.t_h
            .total_cmp(&b.t_h)
            .then(a.k2.total_cmp(&b.k2))
            .then(a.k1.total_cmp(&b.k1))
    });
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for (c, k2_star) in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_g(c.t_h),
            fmt_g(c.k2),
            fmt_g(c.k1),
            c.plant_stable,
            c.string_stable,
            fmt_g(k2_star)
        );
    }
    out
}

pub const FREQ_HEADER: &str = "omega,M1_tilde,M,oracle_ratio";

/// One frequency-response row; `oracle` is left empty when absent.
pub fn freq_row(out: &mut String, omega: f64, m1: f64, m: f64, oracle: Option<f64>) {
    let oracle = oracle.map(fmt_g).unwrap_or_default();
    let _ = writeln!(out, "{},{},{},{oracle}", fmt_g(omega), fmt_g(m1), fmt_g(m));
}
