//! Synthetic demand on a 20 km square city.
//!
//! Distributions, all drawn from the `trips` stream:
//! - arrivals: Poisson process at `requests_per_hour` (exponential gaps),
//!   times truncated to whole seconds;
//! - pickup: uniform over the square;
//! - destination: airport 10%, downtown 25%, restaurant 20%, residential 35%,
//!   other 10%; airport drop-offs land within 0.5 km of the airport, downtown
//!   within 2 km of the centre, the rest uniformly;
//! - road distance: 1.25 x straight line, at least 0.5 km;
//! - heavy traffic with probability 0.2, slowing the trip by half;
//! - duration: road distance at city speed, plus 2 minutes boarding;
//! - rider rating: 75% uniform on [4.5, 5], else uniform on [3, 4.5), two decimals;
//! - fare: 2.50 base + 1.20 per km + 0.30 per minute;
//! - area: remote when the pickup is over 8 km from the centre;
//! - route issues reported with probability 0.05.

use chrono::Duration;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::rng::{stream_rng, streams};
use super::SimConfig;
use crate::dispatch::{AreaType, DestinationCategory, RideInfo, RideRequest};
use crate::geo::{km_to_minutes, Point};
use crate::ids::RequestId;
use crate::money::Cents;
use crate::time::Timestamp;

pub const CITY_SIZE_KM: f64 = 20.0;
pub const CITY_CENTRE: Point = Point::new(10.0, 10.0);
pub const AIRPORT: Point = Point::new(18.0, 18.0);
pub const ROAD_FACTOR: f64 = 1.25;
pub const BOARDING_MINUTES: f64 = 2.0;

const DESTINATION_WEIGHTS: [(DestinationCategory, f64); 5] = [
    (DestinationCategory::Airport, 0.10),
    (DestinationCategory::Downtown, 0.25),
    (DestinationCategory::Restaurant, 0.20),
    (DestinationCategory::Residential, 0.35),
    (DestinationCategory::Other, 0.10),
];

/// Time-ordered requests for the whole configured duration.
pub fn generate_trip_stream(cfg: &SimConfig) -> Vec<RideRequest> {
    let end = cfg.end();
    TripStream::new(cfg).take_while(|r| r.requested_at < end).collect()
}

/// Endless request generator; [`generate_trip_stream`] cuts it at the
/// configured duration.
#[derive(Debug, Clone)]
pub struct TripStream {
    rng: ChaCha8Rng,
    rate_per_hour: f64,
    start: Timestamp,
    elapsed_hours: f64,
    next_id: u64,
}

impl TripStream {
    pub fn new(cfg: &SimConfig) -> Self {
        Self {
            rng: stream_rng(cfg.seed, streams::TRIPS),
            rate_per_hour: cfg.requests_per_hour,
            start: cfg.start,
            elapsed_hours: 0.0,
            next_id: 1,
        }
    }
}

impl Iterator for TripStream {
    type Item = RideRequest;

    fn next(&mut self) -> Option<RideRequest> {
        if self.rate_per_hour <= 0.0 {
            return None;
        }
        let u: f64 = self.rng.random();
        self.elapsed_hours += -(1.0 - u).ln() / self.rate_per_hour;
        let requested_at = self.start + Duration::seconds((self.elapsed_hours * 3600.0).floor() as i64);
        let id = RequestId(self.next_id);
        self.next_id += 1;
        Some(draw_request(&mut self.rng, id, requested_at))
    }
}

fn uniform_point(rng: &mut ChaCha8Rng) -> Point {
    Point::new(rng.random_range(0.0..CITY_SIZE_KM), rng.random_range(0.0..CITY_SIZE_KM))
}

fn near(rng: &mut ChaCha8Rng, centre: Point, radius: f64) -> Point {
    let clamp = |v: f64| v.clamp(0.0, CITY_SIZE_KM);
    Point::new(clamp(centre.x + rng.random_range(-radius..radius)), clamp(centre.y + rng.random_range(-radius..radius)))
}

fn draw_destination(rng: &mut ChaCha8Rng) -> DestinationCategory {
    let mut u: f64 = rng.random();
    for (cat, w) in DESTINATION_WEIGHTS {
        if u < w {
            return cat;
        }
        u -= w;
    }
    DestinationCategory::Other
}

fn draw_request(rng: &mut ChaCha8Rng, id: RequestId, requested_at: Timestamp) -> RideRequest {
    let pickup = uniform_point(rng);
    let destination = draw_destination(rng);
    let dropoff = match destination {
        DestinationCategory::Airport => near(rng, AIRPORT, 0.5),
        DestinationCategory::Downtown => near(rng, CITY_CENTRE, 2.0),
        _ => uniform_point(rng),
    };
    let distance_km = (pickup.distance(dropoff) * ROAD_FACTOR).max(0.5);
    let heavy_traffic = rng.random_bool(0.2);
    let slowdown = if heavy_traffic { 1.5 } else { 1.0 };
    let duration_minutes = km_to_minutes(distance_km) * slowdown + BOARDING_MINUTES;
    let rider_rating = if rng.random_bool(0.75) { rng.random_range(4.5..=5.0) } else { rng.random_range(3.0..4.5) };
    let rider_rating = (rider_rating * 100.0_f64).round() / 100.0;
    let fare = Cents::round_from(250.0 + 120.0 * distance_km + 30.0 * duration_minutes);
    let area = if pickup.distance(CITY_CENTRE) > 8.0 { AreaType::Remote } else { AreaType::Urban };
    let route_issues = rng.random_bool(0.05).then(|| "road works reported on route".to_owned());
    RideRequest {
        id,
        pickup,
        dropoff,
        requested_at,
        eta_minutes: Default::default(),
        duration_minutes,
        distance_km,
        destination,
        rider_rating,
        fare,
        info: RideInfo { heavy_traffic, area, route_issues },
    }
}
