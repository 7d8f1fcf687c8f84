//! The six interview situations as concrete offers.
//!
//! The venue of the offered ride is the destination category; everything a
//! situation leaves unspecified (trip length, rider rating, weekly earnings)
//! is held fixed so that situations differ only where their wording does.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::runner::plain_profile;
use super::stream::{AIRPORT, CITY_CENTRE};
use crate::bbn::{Evidence, FactorAttribution};
use crate::context::default_network;
use crate::dispatch::{make_offer, DestinationCategory, DispatchError, DriverState, MatchConfig, RideInfo, RideRequest};
use crate::geo::Point;
use crate::ids::{DriverId, OfferId, RequestId};
use crate::money::Cents;
use crate::services::DriverProfile;
use crate::time::{at, Timestamp};

pub const RESTAURANT: Point = Point::new(6.0, 12.0);
const TRIP_MINUTES: f64 = 25.0;
const RIDER_RATING: f64 = 4.8;
const HOURS_ALL_DAY: f64 = 10.0;
const EARNED_THIS_WEEK: Cents = Cents(600_00);

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub number: u8,
    pub description: &'static str,
    pub request: RideRequest,
    pub profile: DriverProfile,
    pub state: DriverState,
    pub clock: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTranscript {
    pub number: u8,
    pub description: String,
    pub evidence: Evidence,
    pub probability: f64,
    pub base_probability: f64,
    pub top_factors: Vec<FactorAttribution>,
    pub incentive: Cents,
    pub fare: Cents,
}

struct Situation {
    description: &'static str,
    at_venue: Point,
    ride_venue: DestinationCategory,
    pickup_eta_minutes: f64,
    riding_all_day: bool,
    clock: &'static str,
}

const SATURDAY_11AM: &str = "2024-06-08T11:00:00Z";
const THURSDAY_8PM: &str = "2024-06-06T20:00:00Z";

fn situations() -> [Situation; 6] {
    [
        Situation {
            description: "Just dropped off downtown; next ride is 5 minutes away; 11am Saturday",
            at_venue: CITY_CENTRE,
            ride_venue: DestinationCategory::Downtown,
            pickup_eta_minutes: 5.0,
            riding_all_day: false,
            clock: SATURDAY_11AM,
        },
        Situation {
            description: "Just dropped off downtown; next ride is 15 minutes away; 11am Saturday",
            at_venue: CITY_CENTRE,
            ride_venue: DestinationCategory::Downtown,
            pickup_eta_minutes: 15.0,
            riding_all_day: false,
            clock: SATURDAY_11AM,
        },
        Situation {
            description: "At a busy airport; ride at a restaurant 10 minutes away; first ride of the day; 8pm Thursday",
            at_venue: AIRPORT,
            ride_venue: DestinationCategory::Restaurant,
            pickup_eta_minutes: 10.0,
            riding_all_day: false,
            clock: THURSDAY_8PM,
        },
        Situation {
            description: "At a restaurant; ride at a busy airport 15 minutes away; first ride of the day; 8pm Thursday",
            at_venue: RESTAURANT,
            ride_venue: DestinationCategory::Airport,
            pickup_eta_minutes: 15.0,
            riding_all_day: false,
            clock: THURSDAY_8PM,
        },
        Situation {
            description: "At a busy airport; ride at a restaurant 10 minutes away; riding all day; 8pm Thursday",
            at_venue: AIRPORT,
            ride_venue: DestinationCategory::Restaurant,
            pickup_eta_minutes: 10.0,
            riding_all_day: true,
            clock: THURSDAY_8PM,
        },
        Situation {
            description: "At a restaurant; ride at a busy airport 15 minutes away; riding all day; 8pm Thursday",
            at_venue: RESTAURANT,
            ride_venue: DestinationCategory::Airport,
            pickup_eta_minutes: 15.0,
            riding_all_day: true,
            clock: THURSDAY_8PM,
        },
    ]
}

fn venue_point(cat: DestinationCategory) -> Point {
    match cat {
        DestinationCategory::Airport => AIRPORT,
        DestinationCategory::Restaurant => RESTAURANT,
        _ => CITY_CENTRE,
    }
}

/// The six situations compiled to request, driver and clock.
pub fn interview_scenarios() -> Vec<Scenario> {
    let driver = DriverId::new("scenario-driver");
    situations()
        .into_iter()
        .zip(1u8..)
        .map(|(s, number)| {
            let clock = at(s.clock);
            let venue = venue_point(s.ride_venue);
            // Pickup sits the quoted ETA away at city speed; the override
            // pins the ETA regardless of geometry.
            let pickup = Point::new(s.at_venue.x, s.at_venue.y - crate::geo::CITY_SPEED_KMH * s.pickup_eta_minutes / 60.0);
            let request = RideRequest {
                id: RequestId(u64::from(number)),
                pickup,
                dropoff: venue,
                requested_at: clock,
                eta_minutes: BTreeMap::from([(driver.clone(), s.pickup_eta_minutes)]),
                duration_minutes: TRIP_MINUTES,
                distance_km: TRIP_MINUTES / 60.0 * crate::geo::CITY_SPEED_KMH,
                destination: s.ride_venue,
                rider_rating: RIDER_RATING,
                fare: Cents(2500),
                info: RideInfo::default(),
            };
            let mut state = DriverState::idle(driver.clone(), s.at_venue);
            state.earnings_week = EARNED_THIS_WEEK;
            if s.riding_all_day {
                state.hours_driven_today = HOURS_ALL_DAY;
            }
            Scenario { number, description: s.description, request, profile: plain_profile(driver.clone()), state, clock }
        })
        .collect()
}

/// Offers each situation to a driver with the default network and records
/// what the driver would be shown.
pub fn replay_interview_scenarios() -> Result<Vec<ScenarioTranscript>, DispatchError> {
    let network = default_network();
    let cfg = MatchConfig::default();
    interview_scenarios()
        .into_iter()
        .map(|s| {
            let offer = make_offer(OfferId(u64::from(s.number)), &s.request, &s.profile, &s.state, &network, &cfg, Vec::new(), s.clock)?;
            Ok(ScenarioTranscript {
                number: s.number,
                description: s.description.to_owned(),
                evidence: offer.evidence,
                probability: offer.probability,
                base_probability: offer.base_probability,
                top_factors: offer.top_factors,
                incentive: offer.incentive,
                fare: offer.fare,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diff(t: &[ScenarioTranscript], a: usize, b: usize) -> Vec<String> {
        t[a - 1].evidence.diff(&t[b - 1].evidence)
    }

    #[test]
    fn contrasts_are_single_variable() {
        let t = replay_interview_scenarios().unwrap();
        assert_eq!(t.len(), 6);
        assert_eq!(diff(&t, 1, 2), ["PickupDistance"]);
        assert_eq!(diff(&t, 3, 5), ["Fatigue"]);
        assert_eq!(diff(&t, 4, 6), ["Fatigue"]);
        assert_eq!(diff(&t, 3, 4), ["DestinationCategory"]);
        for x in &t {
            assert!((0.0..=1.0).contains(&x.probability));
            assert!(x.top_factors.len() <= 3);
        }
    }
}
