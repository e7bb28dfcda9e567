//! Three-panel SVG of a trace: distance, speeds, accelerations.

use std::fmt::Write as _;

use carfollow::sim::{SimTrace, TraceRow};

const WIDTH: f64 = 720.0;
const PANEL_H: f64 = 220.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 30.0;
const GAP: f64 = 40.0;

struct Series {
    label: &'static str,
    color: &'static str,
    value: fn(&TraceRow) -> f64,
}

const DISTANCE: &[Series] = &[
    Series { label: "h", color: "#1f77b4", value: |r| r.h },
    Series { label: "h_des", color: "#7f7f7f", value: |r| r.h_des },
];

const SPEEDS: &[Series] = &[
    Series { label: "v_P", color: "#d62728", value: |r| r.v_p },
    Series { label: "v_F", color: "#1f77b4", value: |r| r.v_f },
    Series { label: "v_des", color: "#7f7f7f", value: |r| r.v_des },
    Series { label: "S", color: "#2ca02c", value: |r| r.s },
];

const ACCELERATIONS: &[Series] = &[
    Series { label: "a_des", color: "#1f77b4", value: |r| r.a_des },
    Series { label: "a_fb", color: "#ff7f0e", value: |r| r.a_fb },
    Series { label: "a_cf", color: "#9467bd", value: |r| r.a_cf },
];

fn range(trace: &SimTrace, series: &[Series]) -> (f64, f64) {
    let (lo, hi) = trace
        .rows
        .iter()
        .flat_map(|r| series.iter().map(move |s| (s.value)(r)))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn panel(out: &mut String, trace: &SimTrace, top: f64, title: &str, unit: &str, series: &[Series]) {
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let (t0, t1) = match (trace.rows.first(), trace.rows.last()) {
        (Some(a), Some(b)) if b.t > a.t => (a.t, b.t),
        _ => (0.0, 1.0),
    };
    let (lo, hi) = range(trace, series);
    let x = |t: f64| MARGIN_L + (t - t0) / (t1 - t0) * plot_w;
    let y = |v: f64| top + PANEL_H - (v - lo) / (hi - lo) * PANEL_H;

    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_L}" y="{top}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="#000"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN_L}" y="{:.1}" font-size="13">{title} [{unit}]</text>"#,
        top - 8.0
    );
    for (v, anchor_y) in [(hi, top + 10.0), (lo, top + PANEL_H)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{anchor_y:.1}" font-size="11" text-anchor="end">{v:.3}</text>"#,
            MARGIN_L - 6.0
        );
    }
    if lo < 0.0 && hi > 0.0 {
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN_L}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#ccc" stroke-dasharray="4 3"/>"##,
            y(0.0),
            MARGIN_L + plot_w
        );
    }
    for (i, s) in series.iter().enumerate() {
        let _ = write!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points=""#,
            s.color
        );
        // Thin to at most ~2000 vertices; the CSV holds the full data.
        let stride = (trace.rows.len() / 2000).max(1);
        let last = trace.rows.len().saturating_sub(1);
        for (k, r) in trace.rows.iter().enumerate() {
            if k % stride == 0 || k == last {
                let _ = write!(out, "{:.2},{:.2} ", x(r.t), y((s.value)(r)));
            }
        }
        let _ = writeln!(out, r#""/>"#);
        let ly = top + 16.0 + 18.0 * i as f64;
        let lx = MARGIN_L + plot_w + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-size="12">{}</text>"#,
            lx + 20.0,
            s.color,
            lx + 26.0,
            ly + 4.0,
            s.label
        );
    }
}

pub fn trace_svg(trace: &SimTrace) -> String {
    let height = MARGIN_T + 3.0 * PANEL_H + 2.0 * GAP + 40.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="100%" height="100%" fill="white"/><text x="{}" y="18" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(&trace.scenario)
    );
    let panels: [(&str, &str, &[Series]); 3] = [
        ("distance", "m", DISTANCE),
        ("speed", "m/s", SPEEDS),
        ("acceleration", "m/s²", ACCELERATIONS),
    ];
    for (i, (title, unit, series)) in panels.into_iter().enumerate() {
        panel(&mut out, trace, MARGIN_T + 10.0 + i as f64 * (PANEL_H + GAP), title, unit, series);
    }
    let bottom = MARGIN_T + 10.0 + 3.0 * PANEL_H + 2.0 * GAP;
    let t_end = trace.rows.last().map(|r| r.t).unwrap_or(0.0);
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN_L}" y="{:.1}" font-size="11">0</text><text x="{:.1}" y="{0:.1}" font-size="11" text-anchor="end">t = {t_end} s</text>"#,
        bottom + 16.0,
        WIDTH - MARGIN_R
    );
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
