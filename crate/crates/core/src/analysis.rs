//! Stability and frequency-domain analysis of the closed loop.
//!
//! With states `(S̃, ṽ)` and input `v̇_P`, the loop linearized at the uniform
//! flow equilibrium is
//!
//! ```text
//! ẋ = A x + B u,   A = [[-k1, 0], [-k1, -k2]],   B = [1 - k2·t_h, 1]ᵀ
//! ```
//!
//! Plant stability holds iff `k1 > 0` and `k2 > 0`. The follower/lead speed
//! transfer function is
//!
//! ```text
//! G(s) = ((k1 + k2 - k1·k2·t_h)·s + k1·k2) / (s² + (k1 + k2)·s + k1·k2)
//! ```
//!
//! and `|G(jω)| ≤ 1` for every ω iff `k1·k2·t_h² - 2·(k1 + k2)·t_h + 2 ≤ 0`,
//! equivalently `(k1·t_h - 2)·(k2·t_h - 2) ≤ 2`.

use num_complex::Complex64;

use crate::controller::{feedforward, ControlLaw, ControllerParams, Measurement, RangePolicy};
use crate::error::{Error, Result};
use crate::shaping::{wrap, Shaper};
use crate::sim::{rk4_step, LeadProfile, PlantKind, Scenario, Simulator};

fn check_gains(k1: f64, k2: f64) -> Result<()> {
    if !(k1.is_finite() && k1 > 0.0) {
        return Err(Error::invalid("k1", k1, "must be finite and > 0"));
    }
    if !(k2.is_finite() && k2 > 0.0) {
        return Err(Error::invalid("k2", k2, "must be finite and > 0"));
    }
    Ok(())
}

/// Linearized closed loop about the uniform flow equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedSystem {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
    pub k1: f64,
    pub k2: f64,
    pub t_h: f64,
}

pub fn linearize(k1: f64, k2: f64, t_h: f64) -> Result<LinearizedSystem> {
    check_gains(k1, k2)?;
    if !(t_h.is_finite() && t_h > 0.0) {
        return Err(Error::invalid("t_h", t_h, "must be finite and > 0"));
    }
    Ok(LinearizedSystem {
        a: closed_loop_matrix(k1, k2),
        b: [1.0 - k2 * t_h, 1.0],
        k1,
        k2,
        t_h,
    })
}

/// State matrix for arbitrary (possibly destabilizing) gains.
pub fn closed_loop_matrix(k1: f64, k2: f64) -> [[f64; 2]; 2] {
    [[-k1, 0.0], [-k1, -k2]]
}

/// Eigenvalues of a real 2×2 matrix, larger real part first.
pub fn eigenvalues_2x2(a: &[[f64; 2]; 2]) -> [Complex64; 2] {
    let half_trace = 0.5 * (a[0][0] + a[1][1]);
    let half_gap = 0.5 * (a[0][0] - a[1][1]);
    let disc = half_gap * half_gap + a[0][1] * a[1][0];
    if disc >= 0.0 {
        let r = disc.sqrt();
        [
            Complex64::new(half_trace + r, 0.0),
            Complex64::new(half_trace - r, 0.0),
        ]
    } else {
        let r = (-disc).sqrt();
        [Complex64::new(half_trace, r), Complex64::new(half_trace, -r)]
    }
}

impl LinearizedSystem {
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        eigenvalues_2x2(&self.a)
    }

    /// `(G̃1(s), G̃2(s)) = s·(sI - A)⁻¹·B`.
    pub fn transfer(&self, s: Complex64) -> (Complex64, Complex64) {
        let [[a11, a12], [a21, a22]] = self.a;
        let m11 = s - a11;
        let m22 = s - a22;
        let det = m11 * m22 - a12 * a21;
        let [b1, b2] = self.b;
        let x1 = (m22 * b1 + a12 * b2) / det;
        let x2 = (a21 * b1 + m11 * b2) / det;
        (s * x1, s * x2)
    }

    /// Follower/lead speed perturbation transfer `G(s) = 1 - G̃2(s)`.
    pub fn speed_transfer(&self, s: Complex64) -> Complex64 {
        1.0 - self.transfer(s).1
    }
}

/// Roots of `s² + (k1 + k2)·s + k1·k2` for arbitrary gains.
pub fn characteristic_roots(k1: f64, k2: f64) -> [Complex64; 2] {
    eigenvalues_2x2(&closed_loop_matrix(k1, k2))
}

pub fn plant_stable(k1: f64, k2: f64) -> bool {
    k1 > 0.0 && k2 > 0.0
}

/// Sufficient and necessary string stability condition, boundary included.
/// Requires plant stability.
pub fn string_stable(k1: f64, k2: f64, t_h: f64) -> Result<bool> {
    if !plant_stable(k1, k2) {
        return Err(Error::PlantUnstable { k1, k2 });
    }
    Ok(string_margin(k1, k2, t_h) <= 0.0)
}

/// `k1·k2·t_h² - 2·(k1 + k2)·t_h + 2`; string stable iff `≤ 0`.
///
/// This is the `ω²` coefficient of `P(ω)` divided by `k1·k2`. At `t_h = 1`
/// it coincides with `k1·t_h·(k2 - 2) - 2·(k2·t_h - 1)`; elsewhere that
/// shorter form misclassifies gains (e.g. `k1 = k2 = 3`, `t_h = 2` has
/// `M ≈ 2.07`).
pub fn string_margin(k1: f64, k2: f64, t_h: f64) -> f64 {
    k1 * k2 * t_h * t_h - 2.0 * (k1 + k2) * t_h + 2.0
}

fn magnitude_denominator(k1: f64, k2: f64, w: f64) -> f64 {
    let re = k1 * k2 - w * w;
    let im = (k1 + k2) * w;
    re * re + im * im
}

fn magnitude_m_numerator(k1: f64, k2: f64, t_h: f64, w: f64) -> f64 {
    let lin = (k1 + k2 - k1 * k2 * t_h) * w;
    lin * lin + (k1 * k2) * (k1 * k2)
}

/// Speed perturbation amplification `M(ω) = |G(jω)|`.
pub fn magnitude_m(k1: f64, k2: f64, t_h: f64, w: f64) -> f64 {
    (magnitude_m_numerator(k1, k2, t_h, w) / magnitude_denominator(k1, k2, w)).sqrt()
}

/// Surface tracking gain `M̃1(ω) = |G̃1(jω)|`, bounded by `|1 - k2·t_h|`.
pub fn magnitude_m1(k1: f64, k2: f64, t_h: f64, w: f64) -> f64 {
    let d = 1.0 - k2 * t_h;
    (d * d * w * w * (k2 * k2 + w * w) / magnitude_denominator(k1, k2, w)).sqrt()
}

/// `P(ω) = -ω⁴ + k1·k2·(k1·k2·t_h² - 2·(k1 + k2)·t_h + 2)·ω²`, the numerator
/// minus the denominator of `M²(ω)`.
pub fn amplification_excess(k1: f64, k2: f64, t_h: f64, w: f64) -> f64 {
    let w2 = w * w;
    -w2 * w2 + k1 * k2 * string_margin(k1, k2, t_h) * w2
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

/// 10³ log-spaced frequencies over `[10⁻³, 10³]` rad/s.
pub fn default_frequency_grid() -> Vec<f64> {
    log_grid(1e-3, 1e3, 1000)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub omega: Vec<f64>,
    pub m1: Vec<f64>,
    pub m: Vec<f64>,
}

pub fn frequency_response(k1: f64, k2: f64, t_h: f64, omega: &[f64]) -> Result<FrequencyResponse> {
    check_gains(k1, k2)?;
    if let Some(&w) = omega.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::invalid("omega", w, "must be finite and >= 0"));
    }
    Ok(FrequencyResponse {
        omega: omega.to_vec(),
        m1: omega.iter().map(|&w| magnitude_m1(k1, k2, t_h, w)).collect(),
        m: omega.iter().map(|&w| magnitude_m(k1, k2, t_h, w)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub eigenvalues: [Complex64; 2],
    pub plant_stable: bool,
    /// False whenever the loop is not plant stable.
    pub string_stable: bool,
    /// Tracking-optimal `k2* = 1/t_h`.
    pub k2_star: f64,
    /// Upper bound `|1 - k2·t_h|` of `M̃1`.
    pub tracking_bound: f64,
}

pub fn stability_report(k1: f64, k2: f64, t_h: f64) -> StabilityReport {
    let plant = plant_stable(k1, k2);
    StabilityReport {
        eigenvalues: characteristic_roots(k1, k2),
        plant_stable: plant,
        string_stable: plant && string_margin(k1, k2, t_h) <= 0.0,
        k2_star: 1.0 / t_h,
        tracking_bound: (1.0 - k2 * t_h).abs(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub t_h: f64,
    pub k2: f64,
    pub k1: f64,
    pub plant_stable: bool,
    pub string_stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityGrid {
    pub t_h: f64,
    pub k2_star: f64,
    /// Row-major: `k2` outer, `k1` inner, both ascending.
    pub cells: Vec<SweepCell>,
}

impl StabilityGrid {
    pub fn string_stable_count(&self) -> usize {
        self.cells.iter().filter(|c| c.string_stable).count()
    }
}

/// `n` gains `lo + (hi - lo)·i/n` for `i = 1..=n`; `lo` itself is excluded
/// so a zero lower bound stays on the stable side.
pub fn gain_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Plant/string stability verdicts over a `(k2, k1)` grid.
pub fn sweep_stability(k2_range: (f64, f64), k1_range: (f64, f64), n: usize, t_h: f64) -> Result<StabilityGrid> {
    if n == 0 {
        return Err(Error::Domain("stability grid needs at least one point per axis".into()));
    }
    for (name, (lo, hi)) in [("k2 range", k2_range), ("k1 range", k1_range)] {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(Error::Domain(format!("{name} must satisfy 0 <= lo < hi, got {lo}:{hi}")));
        }
    }
    if !(t_h.is_finite() && t_h > 0.0) {
        return Err(Error::invalid("t_h", t_h, "must be finite and > 0"));
    }
    let k1_axis = gain_axis(k1_range.0, k1_range.1, n);
    let cells = gain_axis(k2_range.0, k2_range.1, n)
        .into_iter()
        .flat_map(|k2| {
            k1_axis.iter().map(move |&k1| {
                let r = stability_report(k1, k2, t_h);
                SweepCell {
                    t_h,
                    k2,
                    k1,
                    plant_stable: r.plant_stable,
                    string_stable: r.string_stable,
                }
            })
        })
        .collect();
    Ok(StabilityGrid {
        t_h,
        k2_star: 1.0 / t_h,
        cells,
    })
}

/// Headways of the four stability diagrams.
pub const DIAGRAM_HEADWAYS: [f64; 4] = [1.0, 0.5, 0.4, 0.2];

/// Closed loop in surface coordinates: surface error and speed error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedState {
    pub s: f64,
    pub v_hat: f64,
}

/// Maps between `(h, v_F)` and `(S, v̂)` for the predecessor-based range
/// policy, away from the surface clamp.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceTransform {
    params: ControllerParams,
    shaper: Shaper,
}

impl SurfaceTransform {
    pub fn new(params: ControllerParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            shaper: params.shaper()?,
            params,
        })
    }

    fn h_des(&self, v_p: f64) -> f64 {
        self.params.h0 + self.params.t_h * v_p
    }

    fn check_unclamped(&self, s: f64, v_f: f64) -> Result<()> {
        if s < -v_f || s > self.params.v_max - v_f {
            Err(Error::ClampedRegion)
        } else {
            Ok(())
        }
    }

    pub fn forward(&self, h: f64, v_f: f64, v_p: f64) -> Result<TransformedState> {
        let v_hat = v_p - v_f;
        let s = v_hat + self.shaper.value(self.params.k2 * (h - self.h_des(v_p)))?;
        self.check_unclamped(s, v_f)?;
        Ok(TransformedState { s, v_hat })
    }

    /// `h = h_des + q⁻¹(S - v̂)/k2`, `v_F = v_P - v̂`.
    pub fn inverse(&self, state: TransformedState, v_p: f64) -> Result<(f64, f64)> {
        let v_f = v_p - state.v_hat;
        self.check_unclamped(state.s, v_f)?;
        let h = self.h_des(v_p) + self.shaper.inverse(state.s - state.v_hat)? / self.params.k2;
        Ok((h, v_f))
    }

    /// Closed-loop rates `(Ṡ, v̂')` of the nonlinear law on the ideal plant.
    pub fn rates(&self, state: TransformedState, v_p: f64, a_p: f64) -> Result<TransformedState> {
        let p = &self.params;
        let (h, v_f) = self.inverse(state, v_p)?;
        let x = self.shaper.inverse(state.s - state.v_hat)?;
        let slope = self.shaper.slope(x)?;
        let a_cf = feedforward(p, &Measurement { h, v_p, v_f });
        let pull = a_cf + p.a_sat * wrap(p.k1 * state.s / p.a_sat)?;
        Ok(TransformedState {
            s: -pull + (1.0 - p.k2 * p.t_h * slope) * a_p,
            v_hat: -pull - slope * p.k2 * state.v_hat + a_p,
        })
    }
}

/// Integrates the closed loop directly in `(S, v̂)` coordinates, sampled
/// like [`Simulator::run`]. Only the ideal plant with the nonlinear law and
/// predecessor-based policy has this representation.
pub fn simulate_transformed(scenario: &Scenario) -> Result<Vec<TransformedState>> {
    scenario.validate()?;
    if scenario.plant != PlantKind::Ideal
        || scenario.law != ControlLaw::Nonlinear
        || scenario.policy != RangePolicy::PredecessorBased
        || scenario.integral
    {
        return Err(Error::Domain(
            "transformed simulation needs the ideal plant, nonlinear law and predecessor-based policy".into(),
        ));
    }
    let map = SurfaceTransform::new(scenario.params)?;
    let lead = &scenario.lead;
    let start = map.forward(scenario.initial.h, scenario.initial.v_f, lead.speed(0.0))?;
    let mut y = [start.s, start.v_hat];
    let steps = scenario.steps();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(start);
    // Lead acceleration may jump on a step boundary (a stop, a table
    // breakpoint); sample it from inside the current step.
    let inset = scenario.dt * 1e-9;
    for k in 0..steps {
        let t0 = k as f64 * scenario.dt;
        let (lo, hi) = (t0 + inset, t0 + scenario.dt - inset);
        y = rk4_step(t0, &y, scenario.dt, |t, y| {
            let a_p = lead.acceleration(t.clamp(lo, hi));
            let r = map.rates(TransformedState { s: y[0], v_hat: y[1] }, lead.speed(t), a_p)?;
            Ok([r.s, r.v_hat])
        })?;
        out.push(TransformedState { s: y[0], v_hat: y[1] });
    }
    Ok(out)
}

/// Settings for the time-domain string stability check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub v0: f64,
    pub amplitude: f64,
    /// Lead periods discarded before measuring.
    pub settle_periods: usize,
    pub measure_periods: usize,
    /// Relative amplitude change allowed between the last two periods.
    pub periodicity_tol: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            v0: 15.0,
            amplitude: 0.2,
            settle_periods: 5,
            measure_periods: 2,
            periodicity_tol: 1e-3,
        }
    }
}

/// Least-squares amplitude of the `freq_hz` component of `(t, v)` samples.
fn fitted_amplitude(samples: &[(f64, f64)], freq_hz: f64) -> f64 {
    // Normal equations for v ≈ c0 + a·sin + b·cos.
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for &(t, v) in samples {
        let phase = std::f64::consts::TAU * freq_hz * t;
        let basis = [1.0, phase.sin(), phase.cos()];
        for i in 0..3 {
            rhs[i] += basis[i] * v;
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
        }
    }
    let det3 = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let det = det3(&m);
    let solve_col = |col: usize| {
        let mut mc = m;
        for (row, r) in mc.iter_mut().zip(rhs) {
            row[col] = r;
        }
        det3(&mc) / det
    };
    solve_col(1).hypot(solve_col(2))
}

/// Steady-state follower/lead speed amplitude ratio under a small
/// sinusoidal lead perturbation, simulated with the nonlinear law on the
/// ideal plant.
pub fn string_stability_oracle(params: &ControllerParams, freq_hz: f64, settings: &OracleSettings) -> Result<f64> {
    if !(freq_hz.is_finite() && freq_hz > 0.0) {
        return Err(Error::invalid("freq_hz", freq_hz, "must be finite and > 0"));
    }
    if settings.measure_periods < 2 || settings.settle_periods < 5 {
        return Err(Error::Domain("oracle needs >= 5 settle periods and >= 2 measured periods".into()));
    }
    let period = 1.0 / freq_hz;
    let dt = (period / 500.0).min(0.02);
    let total = (settings.settle_periods + settings.measure_periods) as f64 * period;
    let mut sc = Scenario::new(
        format!("oracle-{freq_hz}"),
        params.h0 + params.t_h * settings.v0,
        settings.v0,
        settings.v0,
        total,
    );
    sc.params = *params;
    sc.dt = dt;
    sc.lead = LeadProfile::Sinusoid {
        v0: settings.v0,
        amp: settings.amplitude,
        freq_hz,
    };
    let settle_end = settings.settle_periods as f64 * period;
    let mut window = Vec::new();
    Simulator::new(sc)?.run_with(|row| {
        if row.t >= settle_end - 0.5 * dt {
            window.push((row.t, row.v_f));
        }
    })?;

    let per_period = |k: usize| -> Vec<(f64, f64)> {
        let lo = settle_end + k as f64 * period;
        let hi = lo + period;
        window
            .iter()
            .copied()
            .filter(|&(t, _)| t >= lo - 0.5 * dt && t < hi - 0.5 * dt)
            .collect()
    };
    let last = settings.measure_periods - 1;
    let a_prev = fitted_amplitude(&per_period(last - 1), freq_hz);
    let a_last = fitted_amplitude(&per_period(last), freq_hz);
    if !(a_prev.is_finite() && a_last.is_finite()) {
        return Err(Error::OracleNotConverged {
            freq_hz,
            detail: "amplitude fit is not finite".into(),
        });
    }
    let drift = (a_last - a_prev).abs() / a_last.max(f64::MIN_POSITIVE);
    if drift > settings.periodicity_tol {
        return Err(Error::OracleNotConverged {
            freq_hz,
            detail: format!("amplitude changed by {drift:.3e} between the last two periods"),
        });
    }
    Ok(fitted_amplitude(&window, freq_hz) / settings.amplitude)
}
