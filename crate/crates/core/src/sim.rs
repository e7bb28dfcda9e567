//! Deterministic fixed-step closed-loop simulation.
//!
//! The closed loop (plant states, plus the surface integrator when the
//! integral extension is on) is integrated with classic RK4. By default the
//! controller is evaluated at every RK4 stage, which integrates the
//! continuous-time closed loop. [`CommandTiming::ZeroOrderHold`] instead
//! computes the command once per step and holds it.

use std::f64::consts::TAU;

use crate::controller::{ControlLaw, ControlOutput, Controller, ControllerParams, Measurement, RangePolicy};
use crate::error::{Error, Result};
use crate::plant::{
    deriv_disturbed, deriv_lag, deriv_physics, physics_acceleration, torque_controller, DisturbanceSpec,
    PhysicsParams, PlantRate, PlantState,
};

/// Predecessor speed as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum LeadProfile {
    Constant(f64),
    /// Starts at `v0` and brakes at `decel` [m/s², positive] until stopped.
    DecelToStop { v0: f64, decel: f64 },
    /// `v0 + amp·sin(2π·f·t)`, floored at zero.
    Sinusoid { v0: f64, amp: f64, freq_hz: f64 },
    /// Linear interpolation through `(t, v)` samples, held flat outside.
    PiecewiseTable(Vec<(f64, f64)>),
}

impl LeadProfile {
    pub fn validate(&self) -> Result<()> {
        let non_negative = |name, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, v, "must be finite and >= 0"))
            }
        };
        match self {
            LeadProfile::Constant(v0) => non_negative("lead.v0", *v0),
            LeadProfile::DecelToStop { v0, decel } => {
                non_negative("lead.v0", *v0)?;
                if decel.is_finite() && *decel > 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid("lead.decel", *decel, "must be finite and > 0"))
                }
            }
            LeadProfile::Sinusoid { v0, amp, freq_hz } => {
                non_negative("lead.v0", *v0)?;
                non_negative("lead.amp", *amp)?;
                if freq_hz.is_finite() && *freq_hz > 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid("lead.f", *freq_hz, "must be finite and > 0"))
                }
            }
            LeadProfile::PiecewiseTable(samples) => {
                if samples.is_empty() {
                    return Err(Error::Domain("lead speed table is empty".into()));
                }
                for &(t, v) in samples {
                    if !t.is_finite() {
                        return Err(Error::invalid("lead.table.t", t, "must be finite"));
                    }
                    non_negative("lead.table.v", v)?;
                }
                if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::Domain("lead speed table times must strictly increase".into()));
                }
                Ok(())
            }
        }
    }

    pub fn speed(&self, t: f64) -> f64 {
        match self {
            LeadProfile::Constant(v0) => *v0,
            LeadProfile::DecelToStop { v0, decel } => (v0 - decel * t).max(0.0),
            LeadProfile::Sinusoid { v0, amp, freq_hz } => (v0 + amp * (TAU * freq_hz * t).sin()).max(0.0),
            LeadProfile::PiecewiseTable(samples) => match table_segment(samples, t) {
                Segment::Flat(v) => v,
                Segment::Ramp((t0, v0), (t1, v1)) => v0 + (v1 - v0) * (t - t0) / (t1 - t0),
            },
        }
    }

    /// Time derivative of [`LeadProfile::speed`] (right derivative at kinks).
    pub fn acceleration(&self, t: f64) -> f64 {
        match self {
            LeadProfile::Constant(_) => 0.0,
            LeadProfile::DecelToStop { v0, decel } => {
                if decel * t < *v0 {
                    -decel
                } else {
                    0.0
                }
            }
            LeadProfile::Sinusoid { v0, amp, freq_hz } => {
                let phase = TAU * freq_hz * t;
                if v0 + amp * phase.sin() > 0.0 {
                    amp * TAU * freq_hz * phase.cos()
                } else {
                    0.0
                }
            }
            LeadProfile::PiecewiseTable(samples) => match table_segment(samples, t) {
                Segment::Flat(_) => 0.0,
                Segment::Ramp((t0, v0), (t1, v1)) => (v1 - v0) / (t1 - t0),
            },
        }
    }
}

enum Segment {
    Flat(f64),
    Ramp((f64, f64), (f64, f64)),
}

fn table_segment(samples: &[(f64, f64)], t: f64) -> Segment {
    let first = samples[0];
    let last = samples[samples.len() - 1];
    if t < first.0 {
        return Segment::Flat(first.1);
    }
    if t >= last.0 {
        return Segment::Flat(last.1);
    }
    let i = samples.partition_point(|&(ts, _)| ts <= t);
    Segment::Ramp(samples[i - 1], samples[i])
}

/// Follower vehicle model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PlantKind {
    #[default]
    Ideal,
    /// `v̇_F = u + Δ`.
    Disturbed,
    /// First-order acceleration lag with time constant `tau` [s].
    Lag { tau: f64 },
    /// Longitudinal physics with the low-level torque controller; uses the
    /// scenario's [`PhysicsParams`].
    Physics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CommandTiming {
    #[default]
    EveryStage,
    ZeroOrderHold,
}

/// Initial follower state. `a_f` defaults to zero and `torque` to the
/// cruise torque, both meaning "driving at constant speed".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub h: f64,
    pub v_f: f64,
    pub a_f: Option<f64>,
    pub torque: Option<f64>,
}

impl InitialState {
    pub fn new(h: f64, v_f: f64) -> Self {
        Self {
            h,
            v_f,
            a_f: None,
            torque: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: ControllerParams,
    pub initial: InitialState,
    pub lead: LeadProfile,
    pub plant: PlantKind,
    pub disturbance: DisturbanceSpec,
    pub physics: PhysicsParams,
    pub law: ControlLaw,
    pub policy: RangePolicy,
    /// Adds `k_I·e` with `ė = S` to the command.
    pub integral: bool,
    pub duration: f64,
    pub dt: f64,
    pub timing: CommandTiming,
}

impl Scenario {
    /// Nonlinear controller on the ideal plant with a constant-speed lead.
    pub fn new(name: impl Into<String>, h: f64, v_p: f64, v_f: f64, duration: f64) -> Self {
        Self {
            name: name.into(),
            params: ControllerParams::default(),
            initial: InitialState::new(h, v_f),
            lead: LeadProfile::Constant(v_p),
            plant: PlantKind::Ideal,
            disturbance: DisturbanceSpec::None,
            physics: PhysicsParams::default(),
            law: ControlLaw::Nonlinear,
            policy: RangePolicy::PredecessorBased,
            integral: false,
            duration,
            dt: 0.01,
            timing: CommandTiming::EveryStage,
        }
    }

    /// Switches to the linear baseline with the follower-speed range policy.
    pub fn linear_variant(mut self) -> Self {
        self.name.push_str("-linear");
        self.law = ControlLaw::Linear;
        self.policy = RangePolicy::FollowerBased;
        self
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::invalid("duration", self.duration, "must be finite and > 0"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt <= self.duration) {
            return Err(Error::invalid("dt", self.dt, "must be finite, > 0 and <= duration"));
        }
        if !(self.initial.h.is_finite() && self.initial.h > 0.0) {
            return Err(Error::invalid("initial.h", self.initial.h, "must be finite and > 0"));
        }
        if !(self.initial.v_f.is_finite() && self.initial.v_f >= 0.0) {
            return Err(Error::invalid("initial.v_f", self.initial.v_f, "must be finite and >= 0"));
        }
        self.params.validate()?;
        self.lead.validate()?;
        self.disturbance.validate()?;
        self.physics.validate()?;
        let ok = matches!(
            (self.plant, self.disturbance),
            (_, DisturbanceSpec::None)
                | (PlantKind::Disturbed, DisturbanceSpec::Constant(_) | DisturbanceSpec::PhysicsDerived)
                | (PlantKind::Lag { .. }, DisturbanceSpec::ConstantHat(_) | DisturbanceSpec::PhysicsDerived)
        );
        if !ok {
            return Err(Error::Domain(format!(
                "disturbance {:?} does not apply to plant {:?}",
                self.disturbance, self.plant
            )));
        }
        if let PlantKind::Lag { tau } = self.plant {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::invalid("tau", tau, "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

/// One logged sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub h: f64,
    pub h_des: f64,
    pub v_p: f64,
    pub v_f: f64,
    pub v_des: f64,
    pub s: f64,
    pub a_des: f64,
    pub a_fb: f64,
    pub a_fb_bar: f64,
    pub a_cf: f64,
    pub u: f64,
    /// Follower acceleration, only for the lag and physics plants.
    pub a_f: Option<f64>,
    pub(crate) clamped: bool,
}

impl TraceRow {
    pub fn v_hat(&self) -> f64 {
        self.v_p - self.v_f
    }

    pub fn h_hat(&self) -> f64 {
        self.h - self.h_des
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub scenario: String,
    pub dt: f64,
    pub rows: Vec<TraceRow>,
}

impl SimTrace {
    pub fn series(&self, f: impl Fn(&TraceRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Fraction of samples where the surface clamp was active.
    pub fn clamped_fraction(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.clamped).count() as f64 / self.rows.len() as f64
    }

    pub fn min_by(&self, f: impl Fn(&TraceRow) -> f64) -> f64 {
        self.rows.iter().map(f).fold(f64::INFINITY, f64::min)
    }

    pub fn max_by(&self, f: impl Fn(&TraceRow) -> f64) -> f64 {
        self.rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// One classic Runge-Kutta step of `ẏ = f(t, y)`.
pub fn rk4_step<const N: usize>(
    t: f64,
    y: &[f64; N],
    dt: f64,
    mut f: impl FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
) -> Result<[f64; N]> {
    let offset = |base: &[f64; N], k: &[f64; N], scale: f64| {
        let mut out = *base;
        for (o, k) in out.iter_mut().zip(k) {
            *o += scale * k;
        }
        out
    };
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * dt, &offset(y, &k1, 0.5 * dt))?;
    let k3 = f(t + 0.5 * dt, &offset(y, &k2, 0.5 * dt))?;
    let k4 = f(t + dt, &offset(y, &k3, dt))?;
    let mut next = *y;
    for i in 0..N {
        next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(next)
}

// Closed-loop state vector: h, v_F, integrator e, and a_F or torque.
const H: usize = 0;
const V: usize = 1;
const E: usize = 2;
const X: usize = 3;
type Vector = [f64; 4];

/// A scenario bound to its validated controller.
#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: Scenario,
    controller: Controller,
    k_i: f64,
}

struct Held {
    u: f64,
    s: f64,
}

impl Simulator {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let controller = Controller::new(scenario.params, scenario.policy, scenario.law)?;
        let k_i = if scenario.integral { scenario.params.k_i } else { 0.0 };
        Ok(Self {
            scenario,
            controller,
            k_i,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn initial_vector(&self) -> Vector {
        let sc = &self.scenario;
        let x = match sc.plant {
            PlantKind::Lag { .. } => sc.initial.a_f.unwrap_or(0.0),
            PlantKind::Physics => sc
                .initial
                .torque
                .unwrap_or_else(|| sc.physics.cruise_torque(sc.initial.v_f, sc.physics.grade)),
            _ => 0.0,
        };
        [sc.initial.h, sc.initial.v_f, 0.0, x]
    }

    fn measure(&self, t: f64, y: &Vector) -> Measurement {
        Measurement {
            h: y[H],
            v_p: self.scenario.lead.speed(t),
            v_f: y[V],
        }
    }

    fn control(&self, t: f64, y: &Vector) -> Result<ControlOutput> {
        self.controller.control(&self.measure(t, y))
    }

    fn plant_rate(&self, t: f64, y: &Vector, u: f64) -> Result<PlantRate> {
        let sc = &self.scenario;
        let state = PlantState {
            h: y[H],
            v_f: y[V],
            a_f: y[X],
            torque: y[X],
        };
        let v_p = sc.lead.speed(t);
        let grade = sc.physics.grade_at(t);
        Ok(match sc.plant {
            PlantKind::Ideal => deriv_disturbed(&state, v_p, u, 0.0),
            PlantKind::Disturbed => {
                let delta = match sc.disturbance {
                    DisturbanceSpec::Constant(d) => d,
                    DisturbanceSpec::PhysicsDerived => sc.physics.disturbance(state.v_f, grade),
                    _ => 0.0,
                };
                deriv_disturbed(&state, v_p, u, delta)
            }
            PlantKind::Lag { tau } => {
                let delta_hat = match sc.disturbance {
                    DisturbanceSpec::ConstantHat(d) => d,
                    DisturbanceSpec::PhysicsDerived => {
                        PhysicsParams { tau, ..sc.physics }.disturbance_hat(state.v_f, state.a_f, grade)
                    }
                    _ => 0.0,
                };
                let mut rate = deriv_lag(&state, v_p, u, delta_hat, tau)?;
                rate.torque = rate.a_f;
                rate
            }
            PlantKind::Physics => {
                let torque_des = torque_controller(&sc.physics, u, state.v_f, grade);
                let mut rate = deriv_physics(&state, v_p, torque_des, &sc.physics, grade);
                rate.a_f = rate.torque;
                rate
            }
        })
    }

    fn rate(&self, t: f64, y: &Vector, held: Option<&Held>) -> Result<Vector> {
        let (u, s) = match held {
            Some(h) => (h.u, h.s),
            None => {
                let out = self.control(t, y)?;
                (out.a_des + self.k_i * y[E], out.s)
            }
        };
        let rate = self.plant_rate(t, y, u)?;
        Ok([rate.h, rate.v_f, s, rate.a_f])
    }

    fn row(&self, t: f64, y: &Vector) -> Result<TraceRow> {
        let out = self.control(t, y)?;
        let u = out.a_des + self.k_i * y[E];
        let a_f = match self.scenario.plant {
            PlantKind::Lag { .. } => Some(y[X]),
            PlantKind::Physics => {
                let physics = &self.scenario.physics;
                let grade = physics.grade_at(t);
                let torque = if physics.tau == 0.0 {
                    torque_controller(physics, u, y[V], grade)
                } else {
                    y[X]
                };
                Some(physics_acceleration(physics, torque, y[V], grade))
            }
            _ => None,
        };
        Ok(TraceRow {
            t,
            h: y[H],
            h_des: out.h_des,
            v_p: self.measure(t, y).v_p,
            v_f: y[V],
            v_des: out.v_des,
            s: out.s,
            a_des: out.a_des,
            a_fb: out.a_fb,
            a_fb_bar: out.a_fb_bar,
            a_cf: out.a_cf,
            u,
            a_f,
            clamped: out.is_clamped(),
        })
    }

    fn step(&self, t: f64, y: &Vector) -> Result<Vector> {
        let dt = self.scenario.dt;
        let mut next = match self.scenario.timing {
            CommandTiming::EveryStage => rk4_step(t, y, dt, |t, y| self.rate(t, y, None))?,
            CommandTiming::ZeroOrderHold => {
                let out = self.control(t, y)?;
                let held = Held {
                    u: out.a_des + self.k_i * y[E],
                    s: out.s,
                };
                rk4_step(t, y, dt, |t, y| self.rate(t, y, Some(&held)))?
            }
        };
        if let Some(bad) = next.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "state",
                value: *bad,
            });
        }
        // Vehicles do not reverse while car-following.
        next[V] = next[V].max(0.0);
        Ok(next)
    }

    /// Runs the scenario, handing each logged row to `observe`.
    pub fn run_with(&self, mut observe: impl FnMut(&TraceRow)) -> Result<()> {
        let dt = self.scenario.dt;
        let mut y = self.initial_vector();
        let steps = self.scenario.steps();
        for k in 0..=steps {
            let t = k as f64 * dt;
            let row = self.row(t, &y).map_err(|e| abort(t, e))?;
            observe(&row);
            if k < steps {
                y = self.step(t, &y).map_err(|e| abort(t, e))?;
            }
        }
        Ok(())
    }

    pub fn run(&self) -> Result<SimTrace> {
        let mut trace = SimTrace {
            scenario: self.scenario.name.clone(),
            dt: self.scenario.dt,
            rows: Vec::with_capacity(self.scenario.steps() + 1),
        };
        let result = self.run_with(|row| trace.rows.push(*row));
        if let Err(Error::SimulationAborted { t, reason, .. }) = result {
            return Err(Error::SimulationAborted {
                t,
                reason,
                partial: Box::new(trace),
            });
        }
        result?;
        let clamped = trace.clamped_fraction();
        if clamped > 0.0 {
            log::info!("{}: surface clamp active on {:.1}% of samples", trace.scenario, 100.0 * clamped);
        }
        Ok(trace)
    }
}

fn abort(t: f64, err: Error) -> Error {
    match err {
        e @ Error::SimulationAborted { .. } => e,
        e => Error::SimulationAborted {
            t,
            reason: e.to_string(),
            partial: Box::default(),
        },
    }
}

/// Validates and runs a scenario.
pub fn run(scenario: &Scenario) -> Result<SimTrace> {
    Simulator::new(scenario.clone())?.run()
}

/// Names of every built-in scenario, in catalog order.
pub const SCENARIO_NAMES: &[&str] = &[
    "fig4",
    "fig4-linear",
    "fig5",
    "fig5-linear",
    "fig6",
    "fig6-linear",
    "fig7",
    "fig7-linear",
    "fig8a",
    "fig8b",
    "fig9a",
    "fig9b",
    "fig10a",
    "fig10b",
];

/// Built-in scenarios reproducing the simulation figures.
pub fn builtin_scenarios() -> Vec<Scenario> {
    SCENARIO_NAMES
        .iter()
        .map(|name| builtin_scenario(name).expect("catalog names resolve"))
        .collect()
}

pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    let (base, linear) = match name.strip_suffix("-linear") {
        Some(base) => (base, true),
        None => (name, false),
    };
    let mut sc = match base {
        // Far-but-slow predecessor.
        "fig4" => Scenario::new("fig4", 90.0, 20.0, 28.0, 40.0),
        // Far-and-fast predecessor.
        "fig5" => Scenario::new("fig5", 80.0, 20.0, 16.0, 40.0),
        // Close-and-slow predecessor (cut-in).
        "fig6" => Scenario::new("fig6", 10.0, 20.0, 25.0, 40.0),
        // Close-but-fast predecessor.
        "fig7" => Scenario::new("fig7", 10.0, 20.0, 16.0, 40.0),
        "fig8a" | "fig8b" if !linear => {
            let decel = if base == "fig8a" { 2.0 } else { 4.0 };
            let mut sc = Scenario::new(base, 25.0, 20.0, 20.0, 30.0);
            sc.lead = LeadProfile::DecelToStop { v0: 20.0, decel };
            sc
        }
        "fig9a" | "fig9b" if !linear => {
            let amp = if base == "fig9a" { 5.0 } else { 15.0 };
            let mut sc = Scenario::new(base, 20.0, 15.0, 15.0, 80.0);
            sc.lead = LeadProfile::Sinusoid {
                v0: 15.0,
                amp,
                freq_hz: 0.05,
            };
            sc
        }
        "fig10a" if !linear => {
            let mut sc = Scenario::new(base, 90.0, 20.0, 28.0, 40.0);
            sc.plant = PlantKind::Disturbed;
            sc.disturbance = DisturbanceSpec::Constant(0.5);
            sc.integral = true;
            sc
        }
        "fig10b" if !linear => {
            let mut sc = Scenario::new(base, 90.0, 20.0, 28.0, 40.0);
            sc.plant = PlantKind::Lag { tau: 0.8 };
            sc.disturbance = DisturbanceSpec::ConstantHat(0.5);
            sc.integral = true;
            sc
        }
        _ => return Err(Error::UnknownScenario(name.to_string())),
    };
    if linear {
        sc = sc.linear_variant();
    }
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lead_profile_examples() {
        assert_eq!(LeadProfile::Constant(20.0).speed(123.0), 20.0);
        let stop = LeadProfile::DecelToStop { v0: 20.0, decel: 2.0 };
        assert_eq!(stop.speed(10.0), 0.0);
        assert_eq!(stop.speed(25.0), 0.0);
        assert_eq!(stop.acceleration(5.0), -2.0);
        assert_eq!(stop.acceleration(12.0), 0.0);
        let sine = LeadProfile::Sinusoid {
            v0: 15.0,
            amp: 15.0,
            freq_hz: 0.05,
        };
        assert!(sine.speed(15.0).abs() < 1e-12);
        assert!(sine.speed(15.0) >= 0.0);
        let table = LeadProfile::PiecewiseTable(vec![(0.0, 10.0), (10.0, 20.0), (20.0, 20.0)]);
        assert_eq!(table.speed(-1.0), 10.0);
        assert_eq!(table.speed(5.0), 15.0);
        assert_eq!(table.acceleration(5.0), 1.0);
        assert_eq!(table.speed(30.0), 20.0);
        assert!(LeadProfile::PiecewiseTable(vec![(1.0, 1.0), (1.0, 2.0)]).validate().is_err());
        assert!(LeadProfile::DecelToStop { v0: 1.0, decel: 0.0 }.validate().is_err());
    }

    #[test]
    fn rk4_is_exact_for_constant_acceleration() {
        let a = -0.37;
        let y = rk4_step(0.0, &[90.0, 28.0], 0.01, |_, y| Ok([20.0 - y[1], a])).unwrap();
        assert!((y[1] - (28.0 + a * 0.01)).abs() < 1e-14);
        let exact_h = 90.0 + (20.0 - 28.0) * 0.01 - 0.5 * a * 0.01 * 0.01;
        assert!((y[0] - exact_h).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_is_preserved() {
        let sc = Scenario::new("eq", 25.0, 20.0, 20.0, 1.0);
        let sim = Simulator::new(sc).unwrap();
        let mut y = sim.initial_vector();
        for k in 0..100 {
            let next = sim.step(k as f64 * 0.01, &y).unwrap();
            assert!((next[H] - y[H]).abs() < 1e-12 && (next[V] - y[V]).abs() < 1e-12);
            y = next;
        }
    }

    #[test]
    fn row_count_and_constant_step() {
        let trace = run(&builtin_scenario("fig4").unwrap()).unwrap();
        assert_eq!(trace.rows.len(), 4001);
        assert_eq!(trace.rows[0].t, 0.0);
        assert_eq!(trace.last().unwrap().t, 40.0);
        assert!(trace.rows.iter().all(|r| r.a_f.is_none()));
    }

    #[test]
    fn runs_are_bit_identical() {
        for name in ["fig6", "fig10b"] {
            let sc = builtin_scenario(name).unwrap();
            assert_eq!(run(&sc).unwrap(), run(&sc).unwrap());
        }
    }

    #[test]
    fn catalog_lookup() {
        assert_eq!(builtin_scenarios().len(), SCENARIO_NAMES.len());
        let fig4 = builtin_scenario("fig4").unwrap();
        assert_eq!((fig4.initial.h, fig4.lead.speed(0.0), fig4.initial.v_f), (90.0, 20.0, 28.0));
        let fig9 = builtin_scenario("fig9a").unwrap();
        assert_eq!(
            fig9.lead,
            LeadProfile::Sinusoid {
                v0: 15.0,
                amp: 5.0,
                freq_hz: 0.05
            }
        );
        let fig10b = builtin_scenario("fig10b").unwrap();
        assert_eq!(fig10b.plant, PlantKind::Lag { tau: 0.8 });
        assert_eq!(fig10b.params.k_i, 0.1);
        assert!(fig10b.integral);
        let lin = builtin_scenario("fig6-linear").unwrap();
        assert_eq!((lin.law, lin.policy), (ControlLaw::Linear, RangePolicy::FollowerBased));
        assert!(matches!(builtin_scenario("fig11"), Err(Error::UnknownScenario(_))));
        assert!(builtin_scenario("fig8a-linear").is_err());
    }

    #[test]
    fn scenario_validation() {
        let mut sc = builtin_scenario("fig4").unwrap();
        sc.disturbance = DisturbanceSpec::Constant(0.5);
        assert!(sc.validate().is_err());
        let mut sc = builtin_scenario("fig4").unwrap();
        sc.dt = 50.0;
        assert!(sc.validate().is_err());
        let mut sc = builtin_scenario("fig4").unwrap();
        sc.plant = PlantKind::Lag { tau: 0.0 };
        assert!(sc.validate().is_err());
    }

    #[test]
    fn non_finite_state_aborts_with_prefix() {
        let mut sc = builtin_scenario("fig4").unwrap();
        sc.plant = PlantKind::Disturbed;
        sc.disturbance = DisturbanceSpec::Constant(1e308);
        match run(&sc) {
            Err(Error::SimulationAborted { partial, .. }) => assert!(!partial.rows.is_empty()),
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn zero_order_hold_is_first_order() {
        let mut sc = builtin_scenario("fig6").unwrap();
        sc.duration = 10.0;
        let reference = run(&sc).unwrap();
        sc.timing = CommandTiming::ZeroOrderHold;
        let coarse = run(&sc).unwrap();
        sc.dt = 0.005;
        let fine = run(&sc).unwrap();
        let err = |tr: &SimTrace, stride: usize| {
            tr.rows
                .iter()
                .step_by(stride)
                .zip(&reference.rows)
                .map(|(a, b)| (a.v_f - b.v_f).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(&coarse, 1), err(&fine, 2));
        assert!(e1 > 0.0 && e2 < 0.7 * e1, "{e1} {e2}");
    }
}
