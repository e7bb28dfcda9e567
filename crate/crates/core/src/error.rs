use thiserror::Error;

use crate::sim::SimTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("non-finite {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("{0}")]
    Domain(String),

    #[error("gains k1 = {k1}, k2 = {k2} are not plant stable")]
    PlantUnstable { k1: f64, k2: f64 },

    #[error("state lies in the clamped region of the surface; the transform is not invertible there")]
    ClampedRegion,

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("simulation aborted at t = {t}: {reason}")]
    SimulationAborted {
        t: f64,
        reason: String,
        /// Rows recorded before the failure.
        partial: Box<SimTrace>,
    },

    #[error("oracle did not reach a periodic steady state at f = {freq_hz} Hz: {detail}")]
    OracleNotConverged { freq_hz: f64, detail: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
