use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::MatchConfig;
use crate::platform::PlatformError;
use crate::time::{at, Timestamp};

/// First instant of every simulation unless configured otherwise: a Monday.
pub fn default_start() -> Timestamp {
    at("2024-06-03T00:00:00Z")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub drivers: usize,
    pub requests_per_hour: f64,
    pub duration_hours: f64,
    pub matching: MatchConfig,
    pub metric_bins: usize,
    pub learning_enabled: bool,
    /// Share of bundles a driver never answers; they expire.
    pub no_response_rate: f64,
    /// Drivers (from the end of the roster) whose acceptance also depends
    /// on a feature the network cannot see.
    pub misspecified_drivers: usize,
    pub start: Timestamp,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            drivers: 10,
            requests_per_hour: 60.0,
            duration_hours: 24.0,
            matching: MatchConfig::default(),
            metric_bins: 10,
            learning_enabled: true,
            no_response_rate: 0.02,
            misspecified_drivers: 0,
            start: default_start(),
        }
    }
}

impl SimConfig {
    /// A zero duration is allowed and yields no demand.
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.requests_per_hour.is_finite() && self.requests_per_hour >= 0.0) {
            return bad(format!("requests per hour {} must be >= 0", self.requests_per_hour));
        }
        if !(self.duration_hours.is_finite() && self.duration_hours >= 0.0) {
            return bad(format!("duration {} h must be >= 0", self.duration_hours));
        }
        if self.metric_bins == 0 {
            return bad("metric bins must be positive".into());
        }
        if !(0.0..1.0).contains(&self.no_response_rate) {
            return bad(format!("no-response rate {} must be in [0, 1)", self.no_response_rate));
        }
        if self.misspecified_drivers > self.drivers {
            return bad("more misspecified drivers than drivers".into());
        }
        self.matching.validate().map_err(|e| SimError::InvalidConfig(e.to_string()))
    }

    pub fn end(&self) -> Timestamp {
        self.start + chrono::Duration::milliseconds((self.duration_hours * 3_600_000.0).round() as i64)
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Platform(#[from] PlatformError),
}
