//! Car-following control law.
//!
//! The nonlinear law is `a_des = a_cf + a_fb` with
//!
//! * `a_cf`: collision-free feedforward, the kinematic deceleration that
//!   matches speeds at `h_min`, active only while closing in,
//! * `a_fb = ā_fb + a_sat·wrap(k1·S / a_sat)`: motion along the surface
//!   `Ŝ = v̂ + q(k2·ĥ)` plus a saturating correction on the clamped
//!   surface error `S`.
//!
//! The linear law `(k1 + k2)·v̂ + k1·k2·ĥ` is kept as the comparison
//! baseline; near equilibrium it is the linearization of the nonlinear one.

use crate::analysis;
use crate::error::{Error, Result};
use crate::shaping::{wrap, Shaper};

/// Gains and limits of the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerParams {
    /// Standstill distance [m].
    pub h0: f64,
    /// Desired time headway [s].
    pub t_h: f64,
    /// Minimum allowed distance used by the feedforward [m].
    pub h_min: f64,
    /// Singularity guard on `h - h_min` [m].
    pub epsilon: f64,
    /// Preset maximum speed [m/s].
    pub v_max: f64,
    /// Shaper slackness [m/s].
    pub c: f64,
    /// Maximum allowed feedback correction [m/s²].
    pub a_sat: f64,
    /// Physical minimum acceleration, negative [m/s²].
    pub a_min: f64,
    /// Comfortable transient acceleration [m/s²].
    pub a_com: f64,
    pub k1: f64,
    pub k2: f64,
    /// Integral gain, used only when the integral extension is enabled.
    pub k_i: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            h0: 5.0,
            t_h: 1.0,
            h_min: 5.0,
            epsilon: 0.5,
            v_max: 35.0,
            c: 1.0,
            a_sat: 4.0,
            a_min: -10.0,
            a_com: 0.5,
            k1: 1.5,
            k2: 1.0,
            k_i: 0.1,
        }
    }
}

/// `|1 - k2·t_h|` above this gets a tracking warning.
const TRACKING_BOUND_WARN: f64 = 0.5;

impl ControllerParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("h0", self.h0),
            ("t_h", self.t_h),
            ("h_min", self.h_min),
            ("epsilon", self.epsilon),
            ("v_max", self.v_max),
            ("c", self.c),
            ("a_sat", self.a_sat),
            ("a_com", self.a_com),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(name, value, "must be finite and > 0"));
            }
        }
        if !(self.a_min.is_finite() && self.a_min < 0.0) {
            return Err(Error::invalid("a_min", self.a_min, "must be finite and < 0"));
        }
        if !(self.k_i.is_finite() && self.k_i >= 0.0) {
            return Err(Error::invalid("k_i", self.k_i, "must be finite and >= 0"));
        }
        if !(self.k1.is_finite() && self.k2.is_finite()) || !analysis::plant_stable(self.k1, self.k2)
        {
            return Err(Error::PlantUnstable {
                k1: self.k1,
                k2: self.k2,
            });
        }
        Ok(())
    }

    /// Gains of the equivalent linear controller, `(k1 + k2, k1·k2)`.
    pub fn linear_gains(&self) -> (f64, f64) {
        (self.k1 + self.k2, self.k1 * self.k2)
    }

    pub fn shaper(&self) -> Result<Shaper> {
        Shaper::new(self.a_com / self.k2, self.c)
    }

    fn warn_on_guidelines(&self) {
        if let Ok(false) = analysis::string_stable(self.k1, self.k2, self.t_h) {
            log::warn!(
                "gains k1 = {}, k2 = {} are not string stable at t_h = {}",
                self.k1,
                self.k2,
                self.t_h
            );
        }
        let bound = (1.0 - self.k2 * self.t_h).abs();
        if bound > TRACKING_BOUND_WARN {
            log::warn!(
                "k2 = {} is far from 1/t_h = {}; surface tracking error bound is {bound}",
                self.k2,
                1.0 / self.t_h
            );
        }
    }
}

/// Which speed the constant time-headway policy is based on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RangePolicy {
    #[default]
    PredecessorBased,
    FollowerBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlLaw {
    #[default]
    Nonlinear,
    Linear,
}

/// What the follower knows at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// Inter-vehicle distance [m].
    pub h: f64,
    /// Predecessor speed [m/s].
    pub v_p: f64,
    /// Follower speed [m/s].
    pub v_f: f64,
}

impl Measurement {
    pub fn new(h: f64, v_p: f64, v_f: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid("h", h, "distance must be finite and > 0"));
        }
        if !(v_p.is_finite() && v_p >= 0.0) {
            return Err(Error::invalid("v_p", v_p, "speed must be finite and >= 0"));
        }
        if !(v_f.is_finite() && v_f >= 0.0) {
            return Err(Error::invalid("v_f", v_f, "speed must be finite and >= 0"));
        }
        Ok(Self { h, v_p, v_f })
    }
}

/// Every intermediate of one controller evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlOutput {
    pub a_des: f64,
    pub a_cf: f64,
    pub a_fb: f64,
    pub a_fb_bar: f64,
    /// Clamped surface error [m/s].
    pub s: f64,
    /// Unclamped surface [m/s].
    pub s_hat: f64,
    pub v_des: f64,
    pub h_des: f64,
    pub v_hat: f64,
    pub h_hat: f64,
}

impl ControlOutput {
    pub fn is_clamped(&self) -> bool {
        self.s != self.s_hat
    }
}

/// Desired distance `h0 + t_h·v` for the selected policy.
pub fn range_policy(params: &ControllerParams, policy: RangePolicy, v_p: f64, v_f: f64) -> Result<f64> {
    if v_p < 0.0 || v_f < 0.0 {
        return Err(Error::Domain(format!(
            "range policy needs non-negative speeds, got v_p = {v_p}, v_f = {v_f}"
        )));
    }
    let v = match policy {
        RangePolicy::PredecessorBased => v_p,
        RangePolicy::FollowerBased => v_f,
    };
    Ok(params.h0 + params.t_h * v)
}

/// Speed and distance errors `(v̂, ĥ) = (v_P - v_F, h - h_des)`.
pub fn errors(meas: &Measurement, h_des: f64) -> (f64, f64) {
    (meas.v_p - meas.v_f, meas.h - h_des)
}

/// Collision-free feedforward, always in `[a_min, 0]`.
pub fn feedforward(params: &ControllerParams, meas: &Measurement) -> f64 {
    let v_hat = meas.v_p - meas.v_f;
    // Heaviside with H(0) = 0.
    if v_hat >= 0.0 {
        return 0.0;
    }
    let gap = (meas.h - params.h_min).max(params.epsilon);
    (-v_hat * v_hat / (2.0 * gap)).max(params.a_min)
}

/// A validated controller: parameters plus range policy and law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controller {
    params: ControllerParams,
    policy: RangePolicy,
    law: ControlLaw,
    shaper: Shaper,
}

impl Controller {
    pub fn new(params: ControllerParams, policy: RangePolicy, law: ControlLaw) -> Result<Self> {
        params.validate()?;
        params.warn_on_guidelines();
        Ok(Self {
            shaper: params.shaper()?,
            params,
            policy,
            law,
        })
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    pub fn policy(&self) -> RangePolicy {
        self.policy
    }

    pub fn law(&self) -> ControlLaw {
        self.law
    }

    pub fn shaper(&self) -> &Shaper {
        &self.shaper
    }

    pub fn desired_distance(&self, meas: &Measurement) -> Result<f64> {
        range_policy(&self.params, self.policy, meas.v_p, meas.v_f)
    }

    /// `(Ŝ, S)`: the surface and its clamp to `[-v_F, v_max - v_F]`.
    pub fn surface(&self, meas: &Measurement, h_des: f64) -> Result<(f64, f64)> {
        let (v_hat, h_hat) = errors(meas, h_des);
        let s_hat = v_hat + self.shaper.value(self.params.k2 * h_hat)?;
        let s = s_hat.min(self.params.v_max - meas.v_f).max(-meas.v_f);
        Ok((s_hat, s))
    }

    /// `(a_fb, ā_fb)`. The surface acceleration `ā_fb` always uses the
    /// unclamped surface; the clamp only enters through `S`.
    pub fn feedback(&self, meas: &Measurement, h_des: f64) -> Result<(f64, f64)> {
        let (v_hat, h_hat) = errors(meas, h_des);
        let (_, s) = self.surface(meas, h_des)?;
        self.feedback_terms(v_hat, h_hat, s)
    }

    fn feedback_terms(&self, v_hat: f64, h_hat: f64, s: f64) -> Result<(f64, f64)> {
        let p = &self.params;
        let a_bar = self.shaper.slope(p.k2 * h_hat)? * p.k2 * v_hat;
        let a_fb = a_bar + p.a_sat * wrap(p.k1 * s / p.a_sat)?;
        Ok((a_fb, a_bar))
    }

    /// Desired speed `clamp(v_P + q(k2·ĥ), 0, v_max)`.
    pub fn desired_speed(&self, meas: &Measurement, h_des: f64) -> Result<f64> {
        let (_, h_hat) = errors(meas, h_des);
        let v = meas.v_p + self.shaper.value(self.params.k2 * h_hat)?;
        Ok(v.min(self.params.v_max).max(0.0))
    }

    /// Linear baseline `(k1 + k2)·v̂ + k1·k2·ĥ`, unsaturated.
    pub fn linear_feedback(&self, meas: &Measurement) -> Result<f64> {
        let h_des = self.desired_distance(meas)?;
        let (v_hat, h_hat) = errors(meas, h_des);
        let (kv, kh) = self.params.linear_gains();
        Ok(kv * v_hat + kh * h_hat)
    }

    /// Full evaluation of the selected law.
    pub fn control(&self, meas: &Measurement) -> Result<ControlOutput> {
        for (what, value) in [("distance", meas.h), ("predecessor speed", meas.v_p), ("follower speed", meas.v_f)] {
            if !value.is_finite() {
                return Err(Error::NonFinite { what, value });
            }
        }
        let h_des = self.desired_distance(meas)?;
        let (v_hat, h_hat) = errors(meas, h_des);
        let p = &self.params;
        match self.law {
            ControlLaw::Nonlinear => {
                let a_cf = feedforward(p, meas);
                let (s_hat, s) = self.surface(meas, h_des)?;
                let (a_fb, a_fb_bar) = self.feedback_terms(v_hat, h_hat, s)?;
                Ok(ControlOutput {
                    a_des: a_cf + a_fb,
                    a_cf,
                    a_fb,
                    a_fb_bar,
                    s,
                    s_hat,
                    v_des: meas.v_f + s,
                    h_des,
                    v_hat,
                    h_hat,
                })
            }
            ControlLaw::Linear => {
                let s = v_hat + p.k2 * h_hat;
                let a_fb_bar = p.k2 * v_hat;
                let a_fb = a_fb_bar + p.k1 * s;
                Ok(ControlOutput {
                    a_des: a_fb,
                    a_cf: 0.0,
                    a_fb,
                    a_fb_bar,
                    s,
                    s_hat: s,
                    v_des: meas.v_p + p.k2 * h_hat,
                    h_des,
                    v_hat,
                    h_hat,
                })
            }
        }
    }
}

/// Integral of the surface error for the disturbance-rejecting extension
/// `u = a_des + k_I·e`, `ė = S`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegratorState {
    pub e: f64,
}

impl IntegratorState {
    pub fn step(self, s: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", dt, "must be finite and > 0"));
        }
        Ok(Self { e: self.e + s * dt })
    }

    pub fn command(&self, a_des: f64, k_i: f64) -> f64 {
        a_des + k_i * self.e
    }
}
