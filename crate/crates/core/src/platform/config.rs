use std::path::{Path, PathBuf};

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbn::{BayesNetwork, NetworkSpec};
use crate::context::default_network_spec;
use crate::dispatch::MatchConfig;
use crate::earnings::{BonusPolicy, CostProfile};
use crate::ratings::AlertConfig;
use crate::services::{SlaTable, DEFAULT_LOCK_WINDOW_DAYS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config is not valid toml: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Everything that governs platform behaviour. Recorded in the log with
/// every configuration change so replay needs nothing else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub matching: MatchConfig,
    pub alerts: AlertConfig,
    pub sla: SlaTable,
    pub lock_window_secs: i64,
    pub costs: CostProfile,
    pub bonus: BonusPolicy,
    /// When off, observations are logged but networks are not updated.
    pub learning_enabled: bool,
    pub network: NetworkSpec,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            matching: MatchConfig::default(),
            alerts: AlertConfig::default(),
            sla: SlaTable::default(),
            lock_window_secs: Duration::days(DEFAULT_LOCK_WINDOW_DAYS).num_seconds(),
            costs: CostProfile::default(),
            bonus: BonusPolicy::default(),
            learning_enabled: true,
            network: default_network_spec(),
        }
    }
}

impl Settings {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: String| ConfigError::Invalid(e);
        self.matching.validate().map_err(|e| invalid(e.to_string()))?;
        self.alerts.validate().map_err(|e| invalid(e.to_string()))?;
        self.costs.validate().map_err(|e| invalid(e.to_string()))?;
        if self.lock_window_secs < 0 {
            return Err(invalid("lock window must be non-negative".into()));
        }
        if self.bonus.rate_per_hour.0 < 0 {
            return Err(invalid("bonus rate must be non-negative".into()));
        }
        let sla = self.sla;
        if [sla.safety_hours, sla.pay_hours, sla.ratings_hours, sla.app_hours, sla.other_hours].iter().any(|h| *h <= 0) {
            return Err(invalid("SLA hours must be positive".into()));
        }
        BayesNetwork::build(self.network.clone(), 1.0).map_err(|e| invalid(format!("network spec: {e}")))?;
        Ok(())
    }

    pub fn lock_window(&self) -> Duration {
        Duration::seconds(self.lock_window_secs)
    }

    pub fn uses_default_network(&self) -> bool {
        self.network == default_network_spec()
    }
}

/// Simulation parameters used when none are given on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimDefaults {
    pub drivers: usize,
    pub requests_per_hour: f64,
    pub duration_hours: f64,
    pub metric_bins: usize,
}

impl Default for SimDefaults {
    fn default() -> Self {
        Self { drivers: 10, requests_per_hour: 60.0, duration_hours: 24.0, metric_bins: 10 }
    }
}

/// On-disk TOML configuration. Every section is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlatformConfig {
    pub matching: MatchConfig,
    pub ratings: AlertConfig,
    pub sla: SlaTable,
    pub lock_window_days: i64,
    pub costs: CostProfile,
    pub bonus: BonusPolicy,
    pub learning_enabled: bool,
    /// Network spec file, relative to the config file. Absent means the
    /// bundled default network.
    pub network_spec: Option<PathBuf>,
    pub simulation: SimDefaults,
    pub listen: String,
    pub operator_token: String,
    #[serde(skip)]
    network: Option<NetworkSpec>,
}

impl Default for PlatformConfig {
    fn default() -> Self {
        let s = Settings::default();
        Self {
            matching: s.matching,
            ratings: s.alerts,
            sla: s.sla,
            lock_window_days: DEFAULT_LOCK_WINDOW_DAYS,
            costs: s.costs,
            bonus: s.bonus,
            learning_enabled: true,
            network_spec: None,
            simulation: SimDefaults::default(),
            listen: "127.0.0.1:8080".into(),
            operator_token: "dev-operator".into(),
            network: None,
        }
    }
}

impl PlatformConfig {
    /// Parses and validates; `base` resolves a relative network spec path.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg: PlatformConfig = toml::from_str(text)?;
        if let Some(rel) = &cfg.network_spec {
            let path = match base {
                Some(b) if rel.is_relative() => b.join(rel),
                _ => rel.clone(),
            };
            let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
            cfg.network = Some(NetworkSpec::from_toml(&text)?);
        }
        cfg.settings().validate()?;
        if cfg.simulation.metric_bins == 0 {
            return Err(ConfigError::Invalid("metric bins must be positive".into()));
        }
        if cfg.operator_token.trim().is_empty() {
            return Err(ConfigError::Invalid("operator token must not be empty".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::from_toml(&text, path.parent())
    }

    pub fn settings(&self) -> Settings {
        Settings {
            matching: self.matching,
            alerts: self.ratings,
            sla: self.sla,
            lock_window_secs: Duration::days(self.lock_window_days).num_seconds(),
            costs: self.costs.clone(),
            bonus: self.bonus,
            learning_enabled: self.learning_enabled,
            network: self.network.clone().unwrap_or_else(default_network_spec),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let cfg = PlatformConfig::from_toml("", None).unwrap();
        assert_eq!(cfg.settings(), Settings::default());
    }

    #[test]
    fn offer_window_floor() {
        for secs in [10, 45] {
            let text = format!("[matching]\noffer_window_secs = {secs}\n");
            assert!(matches!(PlatformConfig::from_toml(&text, None), Err(ConfigError::Invalid(_))), "{secs}");
        }
        let cfg = PlatformConfig::from_toml("[matching]\noffer_window_secs = 46\n", None).unwrap();
        assert_eq!(cfg.matching.offer_window_secs, 46);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(PlatformConfig::from_toml("bogus = 1\n", None).is_err());
        assert!(PlatformConfig::from_toml("[matching]\nincentive_threshold = 1.5\n", None).is_err());
    }
}
