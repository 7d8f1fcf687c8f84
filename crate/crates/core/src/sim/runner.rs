use std::collections::{BTreeMap, BTreeSet};
use std::iter::Peekable;

use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::ground_truth::{simulate_decision, GroundTruthDriver};
use super::rng::{stream_rng, streams};
use super::stream::{TripStream, CITY_SIZE_KM};
use super::{replay_interview_scenarios, SimConfig, SimError, SimReport};
use crate::bbn::Outcome;
use crate::dispatch::{Decision, DestinationCategory, OfferState};
use crate::earnings::{EarningGoal, GoalPeriod};
use crate::geo::{Point, Route};
use crate::ids::{BundleId, DriverId, TripId};
use crate::money::Cents;
use crate::platform::{EventRecord, MemoryLog, Platform, PlatformError, Settings, TripStatus};
use crate::ratings::{likert_label, Factor, RatingSubmission, PUNCTUALITY_GRACE_MINUTES};
use crate::services::{AssignmentMode, DriverProfile, EmploymentMode, Identity, RideLengthBand};
use crate::time::Timestamp;

/// Simulated time advances in steps of this many seconds.
pub const STEP_SECS: i64 = 30;
/// Drivers answer between these many seconds after an offer arrives.
pub const RESPONSE_SECS: (i64, i64) = (5, 60);

/// A simulated driver: what the platform knows plus the hidden decision model.
#[derive(Debug, Clone, PartialEq)]
pub struct SimDriver {
    pub profile: DriverProfile,
    pub location: Point,
    pub truth: GroundTruthDriver,
}

pub fn driver_id(index: usize) -> DriverId {
    DriverId(format!("d{:03}", index + 1))
}

/// Full-time, radius-matched, no filters, weekly goal of 1500.
pub fn plain_profile(id: DriverId) -> DriverProfile {
    DriverProfile {
        identity: Identity {
            name: format!("Driver {id}"),
            date_of_birth: NaiveDate::from_ymd_opt(1985, 1, 1).expect("valid date"),
            license: format!("LIC-{id}"),
            car: "Sedan".into(),
        },
        driver_id: id,
        earning_goal: EarningGoal { amount: Cents(1500_00), period: GoalPeriod::Weekly },
        rating_floor: 4.0,
        prefers_tipping_riders: false,
        prefers_conversation: false,
        employment: EmploymentMode::FullTime,
        working_windows: Vec::new(),
        home: Point::new(CITY_SIZE_KM / 2.0, CITY_SIZE_KM / 2.0),
        home_route: Route::new(Point::new(0.0, 0.0), Point::new(CITY_SIZE_KM / 2.0, CITY_SIZE_KM / 2.0)),
        going_home: false,
        destination_filter: BTreeSet::new(),
        preferred_destinations: BTreeSet::new(),
        ride_length: RideLengthBand { min_minutes: 0.0, max_minutes: 120.0 },
        assignment: AssignmentMode::Random,
        locks: BTreeMap::new(),
    }
}

fn random_point(rng: &mut ChaCha8Rng) -> Point {
    Point::new(rng.random_range(0.0..CITY_SIZE_KM), rng.random_range(0.0..CITY_SIZE_KM))
}

/// A varied roster drawn from the `drivers` stream. The last
/// `misspecified_drivers` drivers get a hidden time-of-day effect.
pub fn roster(cfg: &SimConfig) -> Vec<SimDriver> {
    let mut rng = stream_rng(cfg.seed, streams::DRIVERS);
    (0..cfg.drivers)
        .map(|i| {
            let id = driver_id(i);
            let mut profile = plain_profile(id.clone());
            profile.home = random_point(&mut rng);
            if rng.random_bool(0.2) {
                profile.employment = EmploymentMode::PartTime;
                profile.home_route = Route::new(random_point(&mut rng), profile.home);
            }
            if rng.random_bool(0.3) {
                profile.assignment = AssignmentMode::Queued;
            }
            if rng.random_bool(0.15) {
                profile.destination_filter.insert(DestinationCategory::Airport);
            }
            if rng.random_bool(0.3) {
                profile.preferred_destinations.insert(DestinationCategory::Downtown);
            }
            if rng.random_bool(0.2) {
                profile.ride_length = RideLengthBand { min_minutes: 0.0, max_minutes: 40.0 };
            }
            if rng.random_bool(0.2) {
                profile.earning_goal = EarningGoal { amount: Cents(250_00), period: GoalPeriod::Daily };
            }
            let location = random_point(&mut rng);
            let truth = if i >= cfg.drivers - cfg.misspecified_drivers {
                GroundTruthDriver::misspecified(id, &mut rng)
            } else {
                GroundTruthDriver::realizable(id, &mut rng)
            };
            SimDriver { profile, location, truth }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct PendingDecision {
    due: Timestamp,
    bundle: BundleId,
}

#[derive(Debug, Clone, Copy)]
struct ScheduledTrip {
    arrival: Timestamp,
    end: Timestamp,
}

/// A running simulation: the platform, its in-memory log, and the simulated
/// drivers and riders acting on it in fixed time steps.
pub struct Simulation {
    platform: Platform,
    log: MemoryLog,
    truths: BTreeMap<DriverId, GroundTruthDriver>,
    demand: Peekable<TripStream>,
    dispatch_rng: ChaCha8Rng,
    decision_rng: ChaCha8Rng,
    ride_rng: ChaCha8Rng,
    pending: Vec<PendingDecision>,
    trips: BTreeMap<TripId, ScheduledTrip>,
    queued: BTreeMap<DriverId, TripId>,
    no_response_rate: f64,
    clock: Timestamp,
}

impl Simulation {
    pub fn new(cfg: &SimConfig, drivers: Vec<SimDriver>) -> Result<Self, SimError> {
        cfg.validate()?;
        let settings = Settings { matching: cfg.matching, learning_enabled: cfg.learning_enabled, ..Settings::default() };
        let log = MemoryLog::new();
        let mut platform = Platform::create(Box::new(log.clone()), settings, cfg.start)?;
        let mut truths = BTreeMap::new();
        for d in drivers {
            platform.register_driver(d.profile, d.location, cfg.start)?;
            truths.insert(d.truth.driver.clone(), d.truth);
        }
        Ok(Self {
            platform,
            log,
            truths,
            demand: TripStream::new(cfg).peekable(),
            dispatch_rng: stream_rng(cfg.seed, streams::DISPATCH),
            decision_rng: stream_rng(cfg.seed, streams::DECISIONS),
            ride_rng: stream_rng(cfg.seed, streams::RIDES),
            pending: Vec::new(),
            trips: BTreeMap::new(),
            queued: BTreeMap::new(),
            no_response_rate: cfg.no_response_rate,
            clock: cfg.start,
        })
    }

    pub fn platform(&self) -> &Platform {
        &self.platform
    }

    pub fn platform_mut(&mut self) -> &mut Platform {
        &mut self.platform
    }

    pub fn clock(&self) -> Timestamp {
        self.clock
    }

    pub fn records(&self) -> Vec<EventRecord> {
        self.log.records()
    }

    pub fn event_count(&self) -> usize {
        self.log.len()
    }

    pub fn truth(&self, driver: &DriverId) -> Option<&GroundTruthDriver> {
        self.truths.get(driver)
    }

    pub fn run_until(&mut self, end: Timestamp) -> Result<(), SimError> {
        while self.clock < end {
            self.step()?;
        }
        Ok(())
    }

    /// Steps while `keep_going` holds, at most `max_steps` times.
    pub fn run_while(&mut self, max_steps: usize, mut keep_going: impl FnMut(&Self) -> bool) -> Result<usize, SimError> {
        let mut steps = 0;
        while steps < max_steps && keep_going(self) {
            self.step()?;
            steps += 1;
        }
        Ok(steps)
    }

    /// One time step: arrivals, trip completions, driver decisions,
    /// expiries, then a dispatch round.
    pub fn step(&mut self) -> Result<(), SimError> {
        let t = self.clock;
        while let Some(r) = self.demand.next_if(|r| r.requested_at <= t) {
            self.platform.submit_request(r, t)?;
        }
        let done: Vec<TripId> = self.trips.iter().filter(|(_, s)| s.end <= t).map(|(id, _)| *id).collect();
        for id in done {
            let s = self.trips.remove(&id).expect("listed");
            self.finish_trip(id, s, t)?;
        }
        self.pending.sort_by_key(|p| (p.due, p.bundle));
        let split = self.pending.partition_point(|p| p.due <= t);
        let due: Vec<PendingDecision> = self.pending.drain(..split).collect();
        for p in due {
            self.answer_bundle(p.bundle, t)?;
        }
        self.platform.tick(t)?;
        let bundles = self.platform.dispatch_round(t, &mut self.dispatch_rng)?;
        for b in bundles {
            if self.decision_rng.random_bool(self.no_response_rate) {
                continue;
            }
            let delay = self.decision_rng.random_range(RESPONSE_SECS.0..=RESPONSE_SECS.1);
            self.pending.push(PendingDecision { due: t + Duration::seconds(delay), bundle: b.id });
        }
        self.clock = t + Duration::seconds(STEP_SECS);
        Ok(())
    }

    /// The driver considers the bundle's offers in order and takes the first
    /// one their hidden model accepts, declining the ones before it.
    fn answer_bundle(&mut self, bundle: BundleId, t: Timestamp) -> Result<(), SimError> {
        let Some(b) = self.platform.state().offers().bundle(bundle).cloned() else { return Ok(()) };
        let truth = self.truths.get(&b.driver).cloned().unwrap_or_else(|| GroundTruthDriver::neutral(b.driver.clone()));
        for offer in &b.offers {
            if self.platform.state().offers().state(offer.id) != Some(OfferState::Pending) {
                continue;
            }
            let draw: f64 = self.decision_rng.random();
            let decision = match simulate_decision(&truth, &offer.evidence, draw) {
                Outcome::Accept => Decision::Accept,
                Outcome::Decline => Decision::Decline,
            };
            let outcomes = match self.platform.decide(&b.driver, offer.id, decision, t) {
                Ok(o) => o,
                Err(PlatformError::Expired(_)) => return Ok(()),
                Err(e) => return Err(e.into()),
            };
            if decision == Decision::Accept {
                for a in outcomes.iter().filter_map(|o| o.trip) {
                    if a.queued {
                        self.queued.insert(b.driver.clone(), a.trip);
                    } else {
                        self.schedule_trip(a.trip, t);
                    }
                }
                break;
            }
        }
        Ok(())
    }

    /// Pickup lands between 2 minutes early and 5 late against the promise,
    /// never before now; the ride itself takes the quoted duration.
    fn schedule_trip(&mut self, trip: TripId, now: Timestamp) {
        let rec = self.platform.state().trip(trip).expect("assigned trip exists");
        let lateness = self.ride_rng.random_range(-120..=300);
        let arrival = (rec.promised_pickup + Duration::seconds(lateness)).max(now);
        let end = arrival + Duration::seconds((rec.request.duration_minutes * 60.0).round() as i64);
        self.trips.insert(trip, ScheduledTrip { arrival, end });
    }

    fn finish_trip(&mut self, trip: TripId, s: ScheduledTrip, t: Timestamp) -> Result<(), SimError> {
        let rec = self.platform.state().trip(trip).expect("scheduled trip exists");
        let driver = rec.driver.clone();
        let fare = rec.request.fare;
        let late = s.arrival > rec.promised_pickup + Duration::minutes(PUNCTUALITY_GRACE_MINUTES);
        let tip = if self.ride_rng.random_bool(0.3) {
            Cents::round_from(fare.0 as f64 * self.ride_rng.random_range(0.1..0.2))
        } else {
            Cents::ZERO
        };
        self.platform.complete_trip(trip, t, Some(s.arrival), tip)?;
        if self.ride_rng.random_bool(0.6) {
            // Late pickups get a poor punctuality score; a few riders mark
            // punctual drivers down too, which the driver then disputes.
            let unfair = !late && self.ride_rng.random_bool(0.05);
            let mut labels = BTreeMap::new();
            for f in Factor::ALL {
                let score = match f {
                    Factor::Punctuality if late || unfair => self.ride_rng.random_range(1..=2),
                    _ => self.ride_rng.random_range(3..=5),
                };
                labels.insert(f, likert_label(score).expect("score in 1..=5").to_owned());
            }
            let rating = self.platform.submit_rating(trip, &RatingSubmission { labels, text: None, prompt_id: None }, t)?;
            if unfair {
                self.platform.dispute_rating(&driver, rating.id, Factor::Punctuality, t)?;
            }
        }
        if let Some(next) = self.queued.remove(&driver) {
            debug_assert_eq!(self.platform.state().trip(next).map(|r| r.status), Some(TripStatus::Active));
            self.schedule_trip(next, t);
        }
        Ok(())
    }
}

/// Output of [`run_simulation`]: the report and the log it was computed from.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub report: SimReport,
    pub events: Vec<EventRecord>,
    pub drivers: Vec<GroundTruthDriver>,
}

/// Runs the configured roster against the configured demand for the whole
/// duration, then computes the report from the log.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimRun, SimError> {
    cfg.validate()?;
    let drivers = roster(cfg);
    let truths = drivers.iter().map(|d| d.truth.clone()).collect();
    let mut sim = Simulation::new(cfg, drivers)?;
    sim.run_until(cfg.end())?;
    let events = sim.records();
    let mut report = SimReport::from_events(&events, cfg.metric_bins);
    report.transcripts = replay_interview_scenarios().map_err(|e| SimError::Platform(e.into()))?;
    Ok(SimRun { report, events, drivers: truths })
}
