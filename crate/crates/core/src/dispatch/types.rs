use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbn::BbnError;
use crate::geo::{km_to_minutes, Point};
use crate::ids::{DriverId, OfferId, RequestId, TripId};
use crate::money::Cents;
use crate::services::{AssignmentMode, DriverProfile};
use crate::time::Timestamp;

/// Offer windows at or below this many seconds are rejected.
pub const OFFER_WINDOW_FLOOR_SECS: i64 = 45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DestinationCategory {
    Airport,
    Downtown,
    Restaurant,
    Residential,
    Other,
}

impl DestinationCategory {
    pub const ALL: [DestinationCategory; 5] = [
        DestinationCategory::Airport,
        DestinationCategory::Downtown,
        DestinationCategory::Restaurant,
        DestinationCategory::Residential,
        DestinationCategory::Other,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DestinationCategory::Airport => "airport",
            DestinationCategory::Downtown => "downtown",
            DestinationCategory::Restaurant => "restaurant",
            DestinationCategory::Residential => "residential",
            DestinationCategory::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaType {
    #[default]
    Urban,
    Remote,
}

/// Extra ride information shown to the driver as-is.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RideInfo {
    pub heavy_traffic: bool,
    pub area: AreaType,
    pub route_issues: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RideRequest {
    pub id: RequestId,
    pub pickup: Point,
    pub dropoff: Point,
    pub requested_at: Timestamp,
    /// Per-driver pickup ETA overrides in minutes. Drivers without an entry
    /// get straight-line distance at city speed.
    #[serde(default)]
    pub eta_minutes: BTreeMap<DriverId, f64>,
    pub duration_minutes: f64,
    pub distance_km: f64,
    pub destination: DestinationCategory,
    pub rider_rating: f64,
    pub fare: Cents,
    #[serde(default)]
    pub info: RideInfo,
}

impl RideRequest {
    pub fn validate(&self) -> Result<(), DispatchError> {
        let bad = |m: &str| Err(DispatchError::InvalidRequest(m.to_owned()));
        if !(self.duration_minutes > 0.0 && self.duration_minutes.is_finite()) {
            return bad("duration must be positive");
        }
        if !(self.distance_km > 0.0 && self.distance_km.is_finite()) {
            return bad("distance must be positive");
        }
        if !self.fare.is_positive() {
            return bad("fare must be positive");
        }
        if !(1.0..=5.0).contains(&self.rider_rating) {
            return bad("rider rating must be within 1..=5");
        }
        if self.eta_minutes.values().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return bad("pickup ETAs must be non-negative");
        }
        Ok(())
    }

    pub fn eta_for(&self, driver: &DriverId, location: Point) -> f64 {
        self.eta_minutes.get(driver).copied().unwrap_or_else(|| km_to_minutes(location.distance(self.pickup)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverState {
    pub driver_id: DriverId,
    pub location: Point,
    pub on_trip: bool,
    /// At most one trip lined up behind the current one.
    pub queued_trip: Option<TripId>,
    pub hours_driven_today: f64,
    pub earnings_today: Cents,
    pub earnings_week: Cents,
    pub available: bool,
}

impl DriverState {
    pub fn idle(driver_id: DriverId, location: Point) -> Self {
        Self {
            driver_id,
            location,
            on_trip: false,
            queued_trip: None,
            hours_driven_today: 0.0,
            earnings_today: Cents::ZERO,
            earnings_week: Cents::ZERO,
            available: true,
        }
    }

    pub fn validate(&self, profile: &DriverProfile) -> Result<(), DispatchError> {
        if !(self.hours_driven_today >= 0.0 && self.hours_driven_today.is_finite()) {
            return Err(DispatchError::InvalidDriverState("hours driven must be non-negative".into()));
        }
        if self.queued_trip.is_some() && profile.assignment != AssignmentMode::Queued {
            return Err(DispatchError::InvalidDriverState("queued trip without queued assignment mode".into()));
        }
        if self.queued_trip.is_some() && !self.on_trip {
            return Err(DispatchError::InvalidDriverState("queued trip while not on a trip".into()));
        }
        Ok(())
    }

    /// Whether a new trip can be assigned right now, directly or queued.
    pub fn has_capacity(&self, profile: &DriverProfile) -> bool {
        !self.on_trip || (profile.assignment == AssignmentMode::Queued && self.queued_trip.is_none())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    /// Offers scored below this probability carry an incentive.
    pub incentive_threshold: f64,
    pub incentive_scale: f64,
    /// Flat bonus, as a share of the fare, when a stated preference is violated.
    pub violation_bonus_share: f64,
    pub offer_window_secs: i64,
    pub radius_km: f64,
    pub detour_budget_minutes: f64,
    pub bundle_size: usize,
    /// Unassigned requests are dropped after this long.
    pub request_ttl_secs: i64,
    /// Requests waiting this long may be offered to drivers whose stated
    /// preferences they violate, with the violation disclosed.
    pub fallback_after_secs: i64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            incentive_threshold: 0.6,
            incentive_scale: 0.5,
            violation_bonus_share: 0.2,
            offer_window_secs: 120,
            radius_km: 10.0,
            detour_budget_minutes: 10.0,
            bundle_size: 3,
            request_ttl_secs: 900,
            fallback_after_secs: 300,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), DispatchError> {
        let bad = |m: String| Err(DispatchError::InvalidConfig(m));
        if !(self.incentive_threshold > 0.0 && self.incentive_threshold <= 1.0) {
            return bad(format!("incentive threshold {} must be in (0, 1]", self.incentive_threshold));
        }
        if !(self.incentive_scale >= 0.0 && self.incentive_scale.is_finite()) {
            return bad(format!("incentive scale {} must be >= 0", self.incentive_scale));
        }
        if !(self.violation_bonus_share >= 0.0 && self.violation_bonus_share.is_finite()) {
            return bad(format!("violation bonus share {} must be >= 0", self.violation_bonus_share));
        }
        if self.offer_window_secs <= OFFER_WINDOW_FLOOR_SECS {
            return bad(format!(
                "offer window {} s must exceed {OFFER_WINDOW_FLOOR_SECS} s",
                self.offer_window_secs
            ));
        }
        if !(self.radius_km > 0.0 && self.radius_km.is_finite()) {
            return bad("radius must be positive".into());
        }
        if !(self.detour_budget_minutes >= 0.0 && self.detour_budget_minutes.is_finite()) {
            return bad("detour budget must be >= 0".into());
        }
        if self.request_ttl_secs <= 0 || self.fallback_after_secs < 0 {
            return bad("request ttl must be positive and fallback delay non-negative".into());
        }
        if !(1..=3).contains(&self.bundle_size) {
            return bad(format!("bundle size {} must be 1..=3", self.bundle_size));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DispatchError {
    #[error("invalid match config: {0}")]
    InvalidConfig(String),
    #[error("invalid ride request: {0}")]
    InvalidRequest(String),
    #[error("invalid driver state: {0}")]
    InvalidDriverState(String),
    #[error(transparent)]
    Evidence(#[from] BbnError),
    #[error("a bundle needs at least one offer")]
    EmptyBundle,
    #[error("offers in a bundle must reference distinct requests")]
    DuplicateRequest,
    #[error("driver {0} already has a bundle in flight")]
    BundleInFlight(DriverId),
    #[error("unknown offer {0}")]
    UnknownOffer(OfferId),
    #[error("offer {0} is already resolved")]
    AlreadyResolved(OfferId),
    #[error("offer {offer} expired before the decision")]
    DecisionAfterExpiry { offer: OfferId, outcomes: Vec<super::OfferOutcome> },
}
