//! Nonlinear car-following control.
//!
//! * [`shaping`]: the wrapper and shaping primitives,
//! * [`controller`]: range policy, surface, feedback and feedforward terms,
//! * [`plant`]: follower vehicle models,
//! * [`analysis`]: linearization, plant/string stability, frequency response,
//! * [`sim`]: fixed-step closed-loop simulation and the scenario catalog.

pub mod analysis;
pub mod controller;
pub mod error;
pub mod plant;
pub mod shaping;
pub mod sim;

pub use controller::{ControlLaw, ControlOutput, Controller, ControllerParams, Measurement, RangePolicy};
pub use error::{Error, Result};
pub use sim::{builtin_scenario, run, Scenario, SimTrace, Simulator};
