//! Closed-form shaping primitives used by the feedback law.
//!
//! `wrap` is the smooth saturation `(2/π)·atan(πx/2)`: odd, bounded in
//! `[-1, 1]`, unit slope at the origin, slope decreasing in `|x|`.
//!
//! [`Shaper`] is the range-to-speed shaping function
//! `q(x) = wrap(x/c)·sqrt(2·b·x·wrap(x/c) + c²)`. It is linear with unit
//! slope near zero and follows the constant-deceleration curve
//! `sqrt(2·b·x)` for large positive `x`.

use std::collections::HashSet;
use std::f64::consts::{FRAC_2_PI, FRAC_PI_2};
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

fn finite(x: f64, what: &'static str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite { what, value: x })
    }
}

// Logged once per (b, c) pair; simulations build many identical shapers.
fn warn_slackness(b: f64, c: f64) {
    static SEEN: OnceLock<Mutex<HashSet<(u64, u64)>>> = OnceLock::new();
    let seen = SEEN.get_or_init(Default::default);
    if seen.lock().map_or(true, |mut s| s.insert((b.to_bits(), c.to_bits()))) {
        log::warn!("shaper slackness c = {c} is not below 2b = {}", 2.0 * b);
    }
}

/// Smooth wrapper `(2/π)·atan(πx/2)`.
pub fn wrap(x: f64) -> Result<f64> {
    let x = finite(x, "wrapper argument")?;
    Ok(FRAC_2_PI * (FRAC_PI_2 * x).atan())
}

/// Derivative of [`wrap`], `1 / (1 + (πx/2)²)`.
pub fn wrap_slope(x: f64) -> Result<f64> {
    let x = finite(x, "wrapper argument")?;
    let z = FRAC_PI_2 * x;
    Ok(1.0 / (1.0 + z * z))
}

/// Shaping function with asymptote parameter `b` and slackness `c`.
///
/// In the controller `b = a_com / k2`, and the argument is `k2·ĥ` in m/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shaper {
    b: f64,
    c: f64,
}

impl Shaper {
    pub fn new(b: f64, c: f64) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::invalid("b", b, "must be finite and > 0"));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::invalid("c", c, "must be finite and > 0"));
        }
        if c >= 2.0 * b {
            warn_slackness(b, c);
        }
        Ok(Self { b, c })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        let x = finite(x, "shaper argument")?;
        let w = wrap(x / self.c)?;
        // x·w ≥ 0 for every x, so the radicand never drops below c².
        Ok(w * (2.0 * self.b * x * w + self.c * self.c).sqrt())
    }

    /// Exact derivative of [`Shaper::value`].
    pub fn slope(&self, x: f64) -> Result<f64> {
        let x = finite(x, "shaper argument")?;
        let (b, c) = (self.b, self.c);
        let w = wrap(x / c)?;
        let dw = wrap_slope(x / c)? / c;
        let root = (2.0 * b * x * w + c * c).sqrt();
        Ok(dw * root + w * b * (w + x * dw) / root)
    }

    /// Numeric inverse by bisection; `q` is an odd bijection of ℝ.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let y = finite(y, "shaper inverse argument")?;
        if y == 0.0 {
            return Ok(0.0);
        }
        let target = y.abs();
        let mut lo = 0.0_f64;
        let mut hi = self.c.max(target * target / (2.0 * self.b) + self.c);
        while self.value(hi)? < target {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..2200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.value(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = if (self.value(hi)? - target).abs() < (self.value(lo)? - target).abs() {
            hi
        } else {
            lo
        };
        Ok(x.copysign(y))
    }
}
