//! Follower vehicle models, from the ideal double integrator up to the
//! physics-based longitudinal model with a feedback-linearizing torque loop.
//!
//! Every model shares the gap dynamics `ḣ = v_P - v_F`; they differ in how
//! the acceleration command `u` reaches `v̇_F`.

use crate::error::{Error, Result};

/// Gravitational acceleration [m/s²].
pub const GRAVITY: f64 = 9.81;

/// Follower state. `a_f` is only meaningful for the lag model and `torque`
/// only for the physics model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    pub h: f64,
    pub v_f: f64,
    pub a_f: f64,
    pub torque: f64,
}

/// Time derivative of [`PlantState`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantRate {
    pub h: f64,
    pub v_f: f64,
    pub a_f: f64,
    pub torque: f64,
}

/// Additive acceleration disturbance entering the plant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DisturbanceSpec {
    #[default]
    None,
    /// Constant `Δ` on `v̇_F = u + Δ` [m/s²].
    Constant(f64),
    /// Constant `Δ̂` on the lag model input [m/s²].
    ConstantHat(f64),
    /// Computed from the mismatch between true and nominal resistance in
    /// [`PhysicsParams`].
    PhysicsDerived,
}

impl DisturbanceSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DisturbanceSpec::Constant(d) | DisturbanceSpec::ConstantHat(d) if !d.is_finite() => {
                Err(Error::invalid("disturbance", d, "must be finite"))
            }
            _ => Ok(()),
        }
    }
}

/// Vehicle and road parameters for the longitudinal physics model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsParams {
    /// Static mass [kg].
    pub mass: f64,
    /// Rotating inertia [kg·m²].
    pub inertia: f64,
    /// Wheel radius [m].
    pub wheel_radius: f64,
    /// Net drive ratio.
    pub gear_ratio: f64,
    /// True rolling resistance coefficient.
    pub rolling: f64,
    /// True air drag constant [kg/m].
    pub drag: f64,
    /// Road grade at t = 0 [rad].
    pub grade: f64,
    /// Grade change rate [rad/s]; zero in every built-in scenario.
    pub grade_rate: f64,
    /// Headwind speed [m/s].
    pub headwind: f64,
    /// Nominal rolling resistance used by the torque controller.
    pub rolling_nominal: f64,
    /// Nominal drag used by the torque controller [kg/m].
    pub drag_nominal: f64,
    /// Torque actuator time constant [s]; zero means the torque follows
    /// its demand instantly.
    pub tau: f64,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self {
            mass: 1500.0,
            inertia: 37.5,
            wheel_radius: 0.31,
            gear_ratio: 10.0,
            rolling: 0.01,
            drag: 0.38,
            grade: 0.0,
            grade_rate: 0.0,
            headwind: 0.0,
            rolling_nominal: 0.01,
            drag_nominal: 0.38,
            tau: 0.8,
        }
    }
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("wheel_radius", self.wheel_radius),
            ("gear_ratio", self.gear_ratio),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, v, "must be finite and > 0"));
            }
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("rolling", self.rolling),
            ("drag", self.drag),
            ("rolling_nominal", self.rolling_nominal),
            ("drag_nominal", self.drag_nominal),
            ("tau", self.tau),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, v, "must be finite and >= 0"));
            }
        }
        for (name, v) in [
            ("grade", self.grade),
            ("grade_rate", self.grade_rate),
            ("headwind", self.headwind),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, v, "must be finite"));
            }
        }
        Ok(())
    }

    /// `m + J/R²`.
    pub fn effective_mass(&self) -> f64 {
        self.mass + self.inertia / (self.wheel_radius * self.wheel_radius)
    }

    pub fn grade_at(&self, t: f64) -> f64 {
        self.grade + self.grade_rate * t
    }

    /// Resistance force with true coefficients [N].
    fn resistance(&self, v_f: f64, grade: f64) -> f64 {
        let mg = self.mass * GRAVITY;
        let air = v_f + self.headwind;
        mg * grade.sin() + self.rolling * mg * grade.cos() + self.drag * air * air
    }

    /// Torque that holds `v_f` constant [N·m].
    pub fn cruise_torque(&self, v_f: f64, grade: f64) -> f64 {
        self.wheel_radius / self.gear_ratio * self.resistance(v_f, grade)
    }

    /// Model disturbance `Δ` left after feedback linearization with the
    /// nominal coefficients.
    pub fn disturbance(&self, v_f: f64, grade: f64) -> f64 {
        let m_eff = self.effective_mass();
        (self.rolling_nominal - self.rolling) * self.mass / m_eff * GRAVITY * grade.cos()
            + (self.drag_nominal - self.drag) / m_eff * v_f * v_f
    }

    /// Lag-model disturbance `Δ̂`, which adds the grade-rate and drag-rate
    /// terms to `Δ`. Uses `tau` as the lag time constant.
    pub fn disturbance_hat(&self, v_f: f64, a_f: f64, grade: f64) -> f64 {
        let m_eff = self.effective_mass();
        self.disturbance(v_f, grade)
            + self.mass * GRAVITY * self.grade_rate * self.tau / m_eff
                * (self.rolling * grade.sin() - grade.cos())
            - 2.0 * self.drag * self.tau * v_f * a_f / m_eff
    }
}

/// `ḣ = v_P - v_F`, `v̇_F = a_cmd`.
pub fn deriv_ideal(state: &PlantState, v_p: f64, a_cmd: f64) -> PlantRate {
    PlantRate {
        h: v_p - state.v_f,
        v_f: a_cmd,
        ..PlantRate::default()
    }
}

/// `v̇_F = u + Δ`.
pub fn deriv_disturbed(state: &PlantState, v_p: f64, u: f64, delta: f64) -> PlantRate {
    deriv_ideal(state, v_p, u + delta)
}

/// First-order actuator lag: `ȧ_F = (-a_F + u + Δ̂) / τ`.
pub fn deriv_lag(state: &PlantState, v_p: f64, u: f64, delta_hat: f64, tau: f64) -> Result<PlantRate> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid("tau", tau, "must be finite and > 0"));
    }
    Ok(PlantRate {
        h: v_p - state.v_f,
        v_f: state.a_f,
        a_f: (-state.a_f + u + delta_hat) / tau,
        torque: 0.0,
    })
}

/// Low-level feedback-linearizing torque law with nominal resistance.
pub fn torque_controller(physics: &PhysicsParams, u: f64, v_f: f64, grade: f64) -> f64 {
    let mg = physics.mass * GRAVITY;
    physics.wheel_radius / physics.gear_ratio
        * (physics.effective_mass() * u
            + mg * grade.sin()
            + physics.rolling_nominal * mg * grade.cos()
            + physics.drag_nominal * v_f * v_f)
}

/// Follower acceleration produced by wheel torque `torque`.
pub fn physics_acceleration(physics: &PhysicsParams, torque: f64, v_f: f64, grade: f64) -> f64 {
    (physics.gear_ratio * torque / physics.wheel_radius - physics.resistance(v_f, grade))
        / physics.effective_mass()
}

/// Longitudinal physics with first-order torque actuator. With `tau == 0`
/// the torque equals its demand and the torque rate is reported as zero.
pub fn deriv_physics(state: &PlantState, v_p: f64, torque_des: f64, physics: &PhysicsParams, grade: f64) -> PlantRate {
    if physics.tau == 0.0 {
        return PlantRate {
            h: v_p - state.v_f,
            v_f: physics_acceleration(physics, torque_des, state.v_f, grade),
            ..PlantRate::default()
        };
    }
    PlantRate {
        h: v_p - state.v_f,
        v_f: physics_acceleration(physics, state.torque, state.v_f, grade),
        a_f: 0.0,
        torque: (torque_des - state.torque) / physics.tau,
    }
}
