//! The default acceptance network and the mapping from a concrete offer
//! situation to evidence over its variables.

use chrono::{Datelike, Timelike, Weekday};

use crate::bbn::{BayesNetwork, BbnError, Evidence, NetworkSpec, StatePreference, DEFAULT_ESS, DEFAULT_SMOOTHING};
use crate::dispatch::{DriverState, RideRequest};
use crate::earnings::{goal_progress, GoalPeriod};
use crate::services::DriverProfile;
use crate::time::Timestamp;

pub mod nodes {
    pub const TIME_OF_DAY: &str = "TimeOfDay";
    pub const DAY_TYPE: &str = "DayType";
    pub const PICKUP_DISTANCE: &str = "PickupDistance";
    pub const TRIP_LENGTH: &str = "TripLength";
    pub const DESTINATION: &str = "DestinationCategory";
    pub const RIDER_RATING: &str = "RiderRating";
    pub const FATIGUE: &str = "Fatigue";
    pub const GOAL_PROGRESS: &str = "GoalProgress";
    pub const INCENTIVE: &str = "IncentivePresent";
    pub const ATTRACTIVENESS: &str = "TripAttractiveness";
    pub const ACCEPT: &str = "Accept";
}

/// Every node `discretize_context` assigns.
pub const CONTEXT_NODES: [&str; 9] = [
    nodes::TIME_OF_DAY,
    nodes::DAY_TYPE,
    nodes::PICKUP_DISTANCE,
    nodes::TRIP_LENGTH,
    nodes::DESTINATION,
    nodes::RIDER_RATING,
    nodes::FATIGUE,
    nodes::GOAL_PROGRESS,
    nodes::INCENTIVE,
];

pub const NEAR_PICKUP_MAX_MINUTES: f64 = 7.0;
pub const SHORT_TRIP_BELOW_MINUTES: f64 = 15.0;
pub const LONG_TRIP_ABOVE_MINUTES: f64 = 40.0;
pub const HIGH_RIDER_RATING: f64 = 4.5;
pub const FRESH_BELOW_HOURS: f64 = 3.0;
pub const TIRED_ABOVE_HOURS: f64 = 7.0;

/// Pseudo-count placed on the rule-selected attractiveness state.
pub const ATTRACTIVENESS_RULE_WEIGHT: f64 = 300.0;

const DEFAULT_SPEC: &str = include_str!("../data/default_network.toml");

pub fn default_network_spec() -> NetworkSpec {
    NetworkSpec::from_toml(DEFAULT_SPEC).expect("bundled network spec parses")
}

/// Points towards an attractive trip: near pickup 1, medium trip 1, long trip
/// 2, airport/downtown/restaurant 1, highly rated rider 1.
pub fn attractiveness_points(pickup: &str, length: &str, destination: &str, rider: &str) -> u32 {
    let mut pts = 0;
    pts += u32::from(pickup == "near");
    pts += match length {
        "medium" => 1,
        "long" => 2,
        _ => 0,
    };
    pts += u32::from(matches!(destination, "airport" | "downtown" | "restaurant"));
    pts += u32::from(rider == "high");
    pts
}

/// low for 0-1 points, medium for 2-3, high for 4-5.
pub fn attractiveness_state(points: u32) -> &'static str {
    match points {
        0 | 1 => "low",
        2 | 3 => "medium",
        _ => "high",
    }
}

/// The default network with Laplace smoothing and the expert attractiveness
/// rule seeded into the TripAttractiveness table. The Accept table starts
/// uniform.
pub fn default_network() -> BayesNetwork {
    let mut net = BayesNetwork::build(default_network_spec(), DEFAULT_SMOOTHING).expect("bundled network spec is valid");
    let states = net.states(nodes::ATTRACTIVENESS).expect("attractiveness node").to_vec();
    let rows = net.cpt(nodes::ATTRACTIVENESS).expect("attractiveness table").rows();
    for row in 0..rows {
        let labels: Vec<(String, String)> = net
            .row_labels(nodes::ATTRACTIVENESS, row)
            .expect("row in range")
            .into_iter()
            .map(|(n, s)| (n.to_owned(), s.to_owned()))
            .collect();
        let get = |name: &str| labels.iter().find(|(n, _)| n == name).map(|(_, s)| s.as_str()).unwrap_or_default();
        let pts = attractiveness_points(
            get(nodes::PICKUP_DISTANCE),
            get(nodes::TRIP_LENGTH),
            get(nodes::DESTINATION),
            get(nodes::RIDER_RATING),
        );
        let target = attractiveness_state(pts);
        let counts: Vec<f64> = states
            .iter()
            .map(|s| DEFAULT_SMOOTHING + if s == target { ATTRACTIVENESS_RULE_WEIGHT } else { 0.0 })
            .collect();
        net.set_row(nodes::ATTRACTIVENESS, row, &counts).expect("counts above floor");
    }
    net
}

/// Translates profile preferences onto the query node's parents. A stated
/// preference on a trip feature feeding TripAttractiveness becomes a
/// preference for attractive trips.
pub fn elicitation_preferences(net: &BayesNetwork, profile: &DriverProfile) -> Vec<StatePreference> {
    let query_parents = net.parents(net.query_name()).unwrap_or_default();
    let attractiveness_parents = net.parents(nodes::ATTRACTIVENESS).unwrap_or_default();
    let mut out: Vec<StatePreference> = Vec::new();
    for pref in profile.preference_dimensions() {
        let lifted = if query_parents.contains(&pref.node.as_str()) {
            pref
        } else if attractiveness_parents.contains(&pref.node.as_str()) && query_parents.contains(&nodes::ATTRACTIVENESS) {
            StatePreference::new(nodes::ATTRACTIVENESS, "high")
        } else {
            continue;
        };
        if !out.contains(&lifted) {
            out.push(lifted);
        }
    }
    out
}

/// A fresh per-driver network: the default plus priors elicited from the profile.
pub fn driver_network(profile: &DriverProfile) -> Result<BayesNetwork, BbnError> {
    let mut net = default_network();
    let prefs = elicitation_preferences(&net, profile);
    net.elicit_priors(&prefs, DEFAULT_ESS)?;
    Ok(net)
}

pub fn pickup_distance_state(eta_minutes: f64) -> &'static str {
    if eta_minutes <= NEAR_PICKUP_MAX_MINUTES {
        "near"
    } else {
        "far"
    }
}

pub fn trip_length_state(minutes: f64) -> &'static str {
    if minutes < SHORT_TRIP_BELOW_MINUTES {
        "short"
    } else if minutes <= LONG_TRIP_ABOVE_MINUTES {
        "medium"
    } else {
        "long"
    }
}

/// TripLength states reachable by a trip lasting between `min` and `max` minutes.
pub fn trip_length_states_within(min: f64, max: f64) -> Vec<&'static str> {
    let mut out = Vec::new();
    if min < SHORT_TRIP_BELOW_MINUTES {
        out.push("short");
    }
    if min <= LONG_TRIP_ABOVE_MINUTES && max >= SHORT_TRIP_BELOW_MINUTES {
        out.push("medium");
    }
    if max > LONG_TRIP_ABOVE_MINUTES {
        out.push("long");
    }
    out
}

pub fn rider_rating_state(rating: f64) -> &'static str {
    if rating < HIGH_RIDER_RATING {
        "low"
    } else {
        "high"
    }
}

pub fn fatigue_state(hours_driven: f64) -> &'static str {
    if hours_driven < FRESH_BELOW_HOURS {
        "fresh"
    } else if hours_driven <= TIRED_ABOVE_HOURS {
        "moderate"
    } else {
        "tired"
    }
}

/// morning 05-12, afternoon 12-17, evening 17-21, night 21-05 (UTC hours).
pub fn time_of_day_state(clock: Timestamp) -> &'static str {
    match clock.hour() {
        5..=11 => "morning",
        12..=16 => "afternoon",
        17..=20 => "evening",
        _ => "night",
    }
}

pub fn day_type_state(clock: Timestamp) -> &'static str {
    match clock.weekday() {
        Weekday::Sat | Weekday::Sun => "weekend",
        _ => "weekday",
    }
}

/// Complete evidence over [`CONTEXT_NODES`] for offering `request` to this
/// driver at `clock`. IncentivePresent is always `no` here; the offer step
/// flips it when an incentive is attached.
pub fn discretize_context(request: &RideRequest, profile: &DriverProfile, state: &DriverState, clock: Timestamp) -> Evidence {
    let eta = request.eta_for(&state.driver_id, state.location);
    let earned = match profile.earning_goal.period {
        GoalPeriod::Daily => state.earnings_today,
        GoalPeriod::Weekly => state.earnings_week,
    };
    let goal = goal_progress(&profile.earning_goal, earned, clock);
    Evidence::new()
        .with(nodes::TIME_OF_DAY, time_of_day_state(clock))
        .with(nodes::DAY_TYPE, day_type_state(clock))
        .with(nodes::PICKUP_DISTANCE, pickup_distance_state(eta))
        .with(nodes::TRIP_LENGTH, trip_length_state(request.duration_minutes))
        .with(nodes::DESTINATION, request.destination.label())
        .with(nodes::RIDER_RATING, rider_rating_state(request.rider_rating))
        .with(nodes::FATIGUE, fatigue_state(state.hours_driven_today))
        .with(nodes::GOAL_PROGRESS, goal.state.label())
        .with(nodes::INCENTIVE, "no")
}
