use serde::{Deserialize, Serialize};

use super::{DriverState, MatchConfig, RideRequest};
use crate::geo::km_to_minutes;
use crate::ids::DriverId;
use crate::services::{DispatchMode, DriverProfile};
use crate::time::Timestamp;

/// Driver preferences a request can violate. Offers may still be made for
/// these, with the violation disclosed and an incentive attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    DestinationFilter,
    WorkingWindow,
    RideLength,
    ModeGeometry,
}

impl Preference {
    pub fn label(self) -> &'static str {
        match self {
            Preference::DestinationFilter => "destination_filter",
            Preference::WorkingWindow => "working_window",
            Preference::RideLength => "ride_length",
            Preference::ModeGeometry => "mode_geometry",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolatedPreference {
    pub preference: Preference,
    pub reason: String,
}

/// Conditions under which no offer is made at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardBlock {
    Unavailable,
    NoCapacity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Eligibility {
    Eligible,
    /// Offerable only with these violations disclosed.
    Violates(Vec<ViolatedPreference>),
    Blocked(HardBlock),
}

impl Eligibility {
    pub fn is_eligible(&self) -> bool {
        matches!(self, Eligibility::Eligible)
    }
}

/// Soft-preference violations of offering `request` to this driver at `clock`.
pub fn preference_violations(
    request: &RideRequest,
    profile: &DriverProfile,
    state: &DriverState,
    cfg: &MatchConfig,
    clock: Timestamp,
) -> Vec<ViolatedPreference> {
    let mut out = Vec::new();
    let mut violate = |preference: Preference, reason: String| out.push(ViolatedPreference { preference, reason });

    if profile.destination_filter.contains(&request.destination) {
        violate(
            Preference::DestinationFilter,
            format!("destination {} is in your destination filter", request.destination.label()),
        );
    }
    if !profile.in_working_window(clock) {
        violate(Preference::WorkingWindow, format!("{} is outside your preferred working hours", clock.format("%a %H:%M")));
    }
    if !profile.ride_length.contains(request.duration_minutes) {
        violate(
            Preference::RideLength,
            format!(
                "trip of {:.0} min is outside your preferred {:.0}-{:.0} min",
                request.duration_minutes, profile.ride_length.min_minutes, profile.ride_length.max_minutes
            ),
        );
    }
    match profile.dispatch_mode(state.location) {
        DispatchMode::RideHailing => {
            let km = state.location.distance(request.pickup);
            if km > cfg.radius_km {
                violate(Preference::ModeGeometry, format!("pickup is {km:.1} km away, beyond your {:.1} km radius", cfg.radius_km));
            }
        }
        DispatchMode::RideShare { route } => {
            let detour = km_to_minutes(route.detour_km(request.pickup, request.dropoff));
            if detour > cfg.detour_budget_minutes {
                violate(
                    Preference::ModeGeometry,
                    format!("trip adds a {detour:.1} min detour to your route, over the {:.1} min budget", cfg.detour_budget_minutes),
                );
            }
        }
    }
    out
}

pub fn check_constraints(
    request: &RideRequest,
    profile: &DriverProfile,
    state: &DriverState,
    cfg: &MatchConfig,
    clock: Timestamp,
) -> Eligibility {
    if !state.available {
        return Eligibility::Blocked(HardBlock::Unavailable);
    }
    if !state.has_capacity(profile) {
        return Eligibility::Blocked(HardBlock::NoCapacity);
    }
    let v = preference_violations(request, profile, state, cfg, clock);
    if v.is_empty() {
        Eligibility::Eligible
    } else {
        Eligibility::Violates(v)
    }
}

/// Drivers who may be offered `request` with no preference violated, in input order.
pub fn filter_candidates(
    request: &RideRequest,
    drivers: &[(DriverProfile, DriverState)],
    cfg: &MatchConfig,
    clock: Timestamp,
) -> Vec<DriverId> {
    drivers
        .iter()
        .filter(|(p, s)| check_constraints(request, p, s, cfg, clock).is_eligible())
        .map(|(p, _)| p.driver_id.clone())
        .collect()
}
