use std::collections::{BTreeMap, BTreeSet};

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Event, EventRecord, Settings, TripCompletion, SCHEMA_VERSION};
use crate::bbn::{BayesNetwork, Outcome};
use crate::dispatch::{preference_violations, DriverState, OfferBook, OfferState, RideOffer, RideRequest};
use crate::earnings::compute_trip_cost;
use crate::geo::Point;
use crate::ids::{DriverId, OfferId, RequestId, TripId};
use crate::money::Cents;
use crate::ratings::{CompletedTrip, DisputeStatus, RatingBook};
use crate::services::{update_profile, ComplaintTicket, ConfigProposal, DriverProfile, Forum, TicketBook, TicketStatus};
use crate::time::{start_of_day, start_of_week, Timestamp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverRecord {
    pub profile: DriverProfile,
    pub state: DriverState,
    pub network: BayesNetwork,
    /// Day and week the running totals in `state` belong to.
    pub day_start: Timestamp,
    pub week_start: Timestamp,
    pub observations: u64,
}

impl DriverRecord {
    /// Driver state with daily and weekly totals reset if `clock` is in a later period.
    pub fn state_at(&self, clock: Timestamp) -> DriverState {
        let mut s = self.state.clone();
        if start_of_day(clock) > self.day_start {
            s.hours_driven_today = 0.0;
            s.earnings_today = Cents::ZERO;
        }
        if start_of_week(clock) > self.week_start {
            s.earnings_week = Cents::ZERO;
        }
        s
    }

    fn roll(&mut self, clock: Timestamp) {
        self.state = self.state_at(clock);
        self.day_start = self.day_start.max(start_of_day(clock));
        self.week_start = self.week_start.max(start_of_week(clock));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripStatus {
    /// Currently being driven.
    Active,
    /// Lined up behind the active trip.
    Queued,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub trip: TripId,
    pub driver: DriverId,
    pub offer: OfferId,
    pub request: RideRequest,
    pub incentive: Cents,
    pub assigned_at: Timestamp,
    pub promised_pickup: Timestamp,
    pub status: TripStatus,
    pub completion: Option<TripCompletion>,
}

impl TripRecord {
    pub fn expected_end(&self) -> Timestamp {
        self.promised_pickup + minutes(self.request.duration_minutes)
    }
}

fn minutes(m: f64) -> Duration {
    Duration::milliseconds((m * 60_000.0).round() as i64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestSlot {
    pub request: RideRequest,
    /// Pending offer currently holding the request.
    pub held_by: Option<OfferId>,
    pub offered_to: BTreeSet<DriverId>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApplyError {
    #[error("expected sequence {expected}, found {found}")]
    Sequence { expected: u64, found: u64 },
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("event time {at} precedes last event time {last}")]
    TimeWentBackwards { at: Timestamp, last: Timestamp },
    #[error("the first event must be a configuration change")]
    NotConfigured,
    #[error("unknown driver {0}")]
    UnknownDriver(DriverId),
    #[error("driver {0} already registered")]
    DuplicateDriver(DriverId),
    #[error("rejected {kind}: {reason}")]
    Invalid { kind: &'static str, reason: String },
}

/// All module state, derived only by applying events in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlatformState {
    settings: Option<Settings>,
    drivers: BTreeMap<DriverId, DriverRecord>,
    requests: BTreeMap<RequestId, RequestSlot>,
    last_request: u64,
    offers: OfferBook,
    observed: BTreeSet<OfferId>,
    trips: BTreeMap<TripId, TripRecord>,
    ratings: RatingBook,
    tickets: TicketBook,
    forum: Forum,
    proposals: Vec<ConfigProposal>,
    last_seq: u64,
    last_at: Option<Timestamp>,
}

impl PlatformState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    pub fn last_at(&self) -> Option<Timestamp> {
        self.last_at
    }

    pub fn settings(&self) -> Option<&Settings> {
        self.settings.as_ref()
    }

    pub fn driver(&self, id: &DriverId) -> Option<&DriverRecord> {
        self.drivers.get(id)
    }

    pub fn drivers(&self) -> impl Iterator<Item = (&DriverId, &DriverRecord)> {
        self.drivers.iter()
    }

    pub fn open_requests(&self) -> impl Iterator<Item = &RequestSlot> {
        self.requests.values()
    }

    pub fn last_request_id(&self) -> u64 {
        self.last_request
    }

    pub fn offers(&self) -> &OfferBook {
        &self.offers
    }

    pub fn is_observed(&self, offer: OfferId) -> bool {
        self.observed.contains(&offer)
    }

    pub fn trip(&self, id: TripId) -> Option<&TripRecord> {
        self.trips.get(&id)
    }

    pub fn trips(&self) -> impl Iterator<Item = &TripRecord> {
        self.trips.values()
    }

    pub fn ratings(&self) -> &RatingBook {
        &self.ratings
    }

    pub fn tickets(&self) -> &TicketBook {
        &self.tickets
    }

    pub fn forum(&self) -> &Forum {
        &self.forum
    }

    pub fn proposals(&self) -> &[ConfigProposal] {
        &self.proposals
    }

    /// Canonical serialized form; equal states give equal bytes.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("state serializes")
    }

    /// Rebuilds state from a complete record sequence.
    pub fn replay<'a>(records: impl IntoIterator<Item = &'a EventRecord>) -> Result<Self, ApplyError> {
        let mut s = Self::new();
        for r in records {
            s.apply(r)?;
        }
        Ok(s)
    }

    /// Validates `record` against the current state and applies it. Nothing
    /// changes when validation fails.
    pub fn apply(&mut self, record: &EventRecord) -> Result<(), ApplyError> {
        self.check(record)?;
        self.mutate(record);
        Ok(())
    }

    pub fn check(&self, record: &EventRecord) -> Result<(), ApplyError> {
        if record.v != SCHEMA_VERSION {
            return Err(ApplyError::Schema(record.v));
        }
        if record.seq != self.last_seq + 1 {
            return Err(ApplyError::Sequence { expected: self.last_seq + 1, found: record.seq });
        }
        if let Some(last) = self.last_at {
            if record.at < last {
                return Err(ApplyError::TimeWentBackwards { at: record.at, last });
            }
        }
        let at = record.at;
        let kind = record.event.kind();
        let bad = |reason: String| ApplyError::Invalid { kind, reason };
        let invalid = |reason: String| Err(bad(reason));

        let settings = match (&self.settings, &record.event) {
            (_, Event::ConfigChange(s)) => {
                return s.validate().map_err(|e| bad(e.to_string()));
            }
            (None, _) => return Err(ApplyError::NotConfigured),
            (Some(s), _) => s,
        };
        let driver = |id: &DriverId| self.drivers.get(id).ok_or_else(|| ApplyError::UnknownDriver(id.clone()));

        match &record.event {
            Event::ConfigChange(_) => unreachable!(),
            Event::DriverRegistered { profile, state, network } => {
                if self.drivers.contains_key(&profile.driver_id) {
                    return Err(ApplyError::DuplicateDriver(profile.driver_id.clone()));
                }
                profile.validate().map_err(|e| bad(e.to_string()))?;
                state.validate(profile).map_err(|e| bad(e.to_string()))?;
                if state.driver_id != profile.driver_id {
                    return invalid("state and profile name different drivers".into());
                }
                if network.spec() != &settings.network {
                    return invalid("network does not match the configured spec".into());
                }
            }
            Event::ProfileUpdated { driver: id, changes, update } => {
                let rec = driver(id)?;
                let expected = update_profile(&rec.profile, changes, at, settings.lock_window()).map_err(|e| bad(e.to_string()))?;
                if &expected != update.as_ref() {
                    return invalid("update does not follow from the changes".into());
                }
            }
            Event::DriverStatus(state) => {
                let rec = driver(&state.driver_id)?;
                state.validate(&rec.profile).map_err(|e| bad(e.to_string()))?;
                let cur = &rec.state;
                if state.on_trip != cur.on_trip || state.queued_trip != cur.queued_trip {
                    return invalid("trip assignment changes only through offers and completions".into());
                }
            }
            Event::RequestReceived(r) => {
                r.validate().map_err(|e| bad(e.to_string()))?;
                if r.id.0 <= self.last_request {
                    return invalid(format!("request id {} is not fresh", r.id));
                }
            }
            Event::RequestDropped { request } => match self.requests.get(request) {
                None => return invalid(format!("request {request} is not open")),
                Some(slot) if slot.held_by.is_some() => return invalid(format!("request {request} is held by an offer")),
                Some(_) => {}
            },
            Event::OfferIssued(bundle) => {
                let rec = driver(&bundle.driver)?;
                let now = rec.state_at(at);
                if !now.available || !now.has_capacity(&rec.profile) {
                    return invalid(format!("driver {} cannot take offers now", bundle.driver));
                }
                self.offers.check_issue(bundle).map_err(|e| bad(e.to_string()))?;
                let mut seen = BTreeSet::new();
                for (expected, o) in (self.offers.next_offer_id().0..).zip(&bundle.offers) {
                    if o.id.0 != expected {
                        return invalid(format!("offer id {} out of order", o.id));
                    }
                    if o.driver != bundle.driver || o.expires_at != bundle.expires_at || o.issued_at != at {
                        return invalid(format!("offer {} does not match its bundle", o.id));
                    }
                    if o.expires_at - o.issued_at <= Duration::seconds(crate::dispatch::OFFER_WINDOW_FLOOR_SECS) {
                        return invalid(format!("offer {} window is below the floor", o.id));
                    }
                    let slot = self.requests.get(&o.request);
                    match slot {
                        Some(s) if s.held_by.is_none() && !s.offered_to.contains(&o.driver) => {}
                        _ => return invalid(format!("request {} is not available to {}", o.request, o.driver)),
                    }
                    let req = &slot.expect("matched above").request;
                    let violations = preference_violations(req, &rec.profile, &now, &settings.matching, at);
                    if violations != o.violated_preferences {
                        return invalid(format!("offer {} misstates violated preferences", o.id));
                    }
                    if !seen.insert(o.request) {
                        return invalid("bundle repeats a request".into());
                    }
                    if !(0.0..=1.0).contains(&o.probability) || o.incentive.0 < 0 {
                        return invalid(format!("offer {} has out-of-range values", o.id));
                    }
                }
                if bundle.id != self.offers.next_bundle_id() {
                    return invalid(format!("bundle id {} out of order", bundle.id));
                }
            }
            Event::OfferResolved(out) => {
                let offer = self.pending_offer(out.offer).map_err(bad)?;
                let rec = driver(&offer.driver)?;
                if out.driver != offer.driver || self.offers.bundle(out.bundle).is_none_or(|b| !b.offers.iter().any(|o| o.id == out.offer)) {
                    return invalid("outcome names the wrong driver or bundle".into());
                }
                let live = at < offer.expires_at;
                match out.state {
                    OfferState::Pending => return invalid("pending is not an outcome".into()),
                    OfferState::Accepted => {
                        if !live {
                            return invalid("accepted after expiry".into());
                        }
                        let trip = out.trip.ok_or_else(|| ApplyError::Invalid { kind, reason: "accept without trip".into() })?;
                        if trip.trip != TripId(offer.id.0) || trip.queued != rec.state.on_trip {
                            return invalid("trip assignment inconsistent with driver state".into());
                        }
                        if !rec.state.has_capacity(&rec.profile) {
                            return invalid("driver has no capacity".into());
                        }
                        if !self.requests.contains_key(&offer.request) {
                            return invalid("request no longer open".into());
                        }
                    }
                    OfferState::Declined if !live => return invalid("declined after expiry".into()),
                    OfferState::Expired if live => return invalid("expired before its deadline".into()),
                    OfferState::Voided => {
                        let bundle = self.offers.bundle(out.bundle).expect("checked above");
                        if !bundle.offers.iter().any(|o| self.offers.state(o.id) == Some(OfferState::Accepted)) {
                            return invalid("voided without an accepted sibling".into());
                        }
                    }
                    _ => {}
                }
                if out.state != OfferState::Accepted && out.trip.is_some() {
                    return invalid("only accepted offers carry a trip".into());
                }
                let expects_obs = out.state != OfferState::Voided;
                if out.observation.is_some() != expects_obs {
                    return invalid("observation presence does not match the outcome".into());
                }
            }
            Event::Observation { driver: id, offer, observation, cell } => {
                let rec = driver(id)?;
                let o = self.offers.offer(*offer).ok_or_else(|| ApplyError::Invalid { kind, reason: format!("unknown offer {offer}") })?;
                if &o.driver != id {
                    return invalid("offer belongs to another driver".into());
                }
                if self.observed.contains(offer) {
                    return invalid(format!("offer {offer} already observed"));
                }
                let expected = match self.offers.state(*offer) {
                    Some(OfferState::Accepted) => Outcome::Accept,
                    Some(OfferState::Declined | OfferState::Expired) => Outcome::Decline,
                    other => return invalid(format!("offer {offer} in state {other:?} yields no observation")),
                };
                if observation.outcome != expected || observation.evidence != o.evidence {
                    return invalid("observation does not match the offer".into());
                }
                let want = if settings.learning_enabled {
                    Some(rec.network.observation_cell(observation).map_err(|e| bad(e.to_string()))?)
                } else {
                    None
                };
                if &want != cell {
                    return invalid("learning cell mismatch".into());
                }
            }
            Event::TripCompleted(c) => {
                let trip = self.trips.get(&c.trip).ok_or_else(|| ApplyError::Invalid { kind, reason: format!("unknown trip {}", c.trip) })?;
                if trip.status != TripStatus::Active || trip.driver != c.driver {
                    return invalid(format!("trip {} is not active for {}", c.trip, c.driver));
                }
                if c.telemetry.promised_pickup != trip.promised_pickup || !(c.hours >= 0.0 && c.hours.is_finite()) || c.tip.0 < 0 {
                    return invalid("completion data inconsistent".into());
                }
                let want = compute_trip_cost(&settings.costs, trip.request.distance_km, c.hours, trip.request.fare, trip.incentive, c.tip)
                    .map_err(|e| bad(e.to_string()))?;
                if want != c.breakdown {
                    return invalid("breakdown does not match the cost profile".into());
                }
            }
            Event::Rating(r) => {
                let mut submission = crate::ratings::RatingSubmission::default();
                for (f, v) in &r.scores {
                    let label = crate::ratings::likert_label(*v).ok_or_else(|| ApplyError::Invalid { kind, reason: format!("score {v} out of range") })?;
                    submission.labels.insert(*f, label.to_owned());
                }
                if let Some(fb) = &r.feedback {
                    submission.text = Some(fb.text.clone());
                    submission.prompt_id = fb.prompt_id.clone();
                }
                let want = self.ratings.prepare_rating(r.trip, &submission, at).map_err(|e| bad(e.to_string()))?;
                if &want != r.as_ref() {
                    return invalid("rating record inconsistent".into());
                }
            }
            Event::Dispute(d) => {
                let want = match d.status {
                    DisputeStatus::Filed => self.ratings.prepare_dispute(d.rating, d.factor, at),
                    _ => self.ratings.judge_dispute(d.id),
                }
                .map_err(|e| bad(e.to_string()))?;
                if &want != d.as_ref() {
                    return invalid("dispute inconsistent".into());
                }
            }
            Event::Ticket(t) => {
                let want: Result<ComplaintTicket, _> = match self.tickets.get(t.id) {
                    None if t.id == self.tickets.next_id() => {
                        driver(&t.driver)?;
                        crate::services::open_complaint(t.id, t.driver.clone(), t.category, &t.text, at, &settings.sla)
                    }
                    None => return invalid(format!("ticket id {} out of order", t.id)),
                    Some(prev) if t.status != TicketStatus::Open => prev.advance(t.status, at),
                    Some(_) => return invalid("ticket already open".into()),
                };
                let want = want.map_err(|e| bad(e.to_string()))?;
                if &want != t.as_ref() {
                    return invalid("ticket inconsistent".into());
                }
            }
            Event::Forum { actor, action, entity, proposal } => {
                driver(actor)?;
                let out = self.forum.plan(actor, action, at).map_err(|e| bad(e.to_string()))?;
                if &out.entity != entity.as_ref() || &out.proposal != proposal {
                    return invalid("forum entity inconsistent with action".into());
                }
            }
        }
        Ok(())
    }

    fn pending_offer(&self, id: OfferId) -> Result<&RideOffer, String> {
        match self.offers.state(id) {
            Some(OfferState::Pending) => Ok(self.offers.offer(id).expect("state implies offer")),
            Some(s) => Err(format!("offer {id} already {s:?}")),
            None => Err(format!("unknown offer {id}")),
        }
    }

    fn mutate(&mut self, record: &EventRecord) {
        let at = record.at;
        self.last_seq = record.seq;
        self.last_at = Some(at);
        match &record.event {
            Event::ConfigChange(s) => self.settings = Some(s.as_ref().clone()),
            Event::DriverRegistered { profile, state, network } => {
                self.drivers.insert(
                    profile.driver_id.clone(),
                    DriverRecord {
                        profile: profile.as_ref().clone(),
                        state: state.clone(),
                        network: network.as_ref().clone(),
                        day_start: start_of_day(at),
                        week_start: start_of_week(at),
                        observations: 0,
                    },
                );
            }
            Event::ProfileUpdated { driver, update, .. } => {
                let rec = self.drivers.get_mut(driver).expect("checked");
                rec.profile = update.profile.clone();
            }
            Event::DriverStatus(state) => {
                let rec = self.drivers.get_mut(&state.driver_id).expect("checked");
                rec.roll(at);
                rec.state = state.clone();
            }
            Event::RequestReceived(r) => {
                self.last_request = r.id.0;
                self.requests.insert(r.id, RequestSlot { request: r.as_ref().clone(), held_by: None, offered_to: BTreeSet::new() });
            }
            Event::RequestDropped { request } => {
                self.requests.remove(request);
            }
            Event::OfferIssued(bundle) => {
                for o in &bundle.offers {
                    let slot = self.requests.get_mut(&o.request).expect("checked");
                    slot.held_by = Some(o.id);
                    slot.offered_to.insert(o.driver.clone());
                }
                self.offers.insert_bundle(bundle.as_ref().clone());
            }
            Event::OfferResolved(out) => {
                let offer = self.offers.offer(out.offer).expect("checked").clone();
                self.offers.apply_outcome(out);
                match (out.state, out.trip) {
                    (OfferState::Accepted, Some(assign)) => {
                        let slot = self.requests.remove(&offer.request).expect("checked");
                        let eta = minutes(offer.pickup_eta_minutes);
                        let rec = self.drivers.get_mut(&offer.driver).expect("checked");
                        let (status, promised) = if assign.queued {
                            let active_end = self
                                .trips
                                .values()
                                .filter(|t| t.driver == offer.driver && t.status == TripStatus::Active)
                                .map(TripRecord::expected_end)
                                .max()
                                .unwrap_or(at);
                            rec.state.queued_trip = Some(assign.trip);
                            (TripStatus::Queued, active_end.max(at) + eta)
                        } else {
                            rec.state.on_trip = true;
                            (TripStatus::Active, at + eta)
                        };
                        self.trips.insert(
                            assign.trip,
                            TripRecord {
                                trip: assign.trip,
                                driver: offer.driver.clone(),
                                offer: offer.id,
                                request: slot.request,
                                incentive: offer.incentive,
                                assigned_at: at,
                                promised_pickup: promised,
                                status,
                                completion: None,
                            },
                        );
                    }
                    _ => {
                        if let Some(slot) = self.requests.get_mut(&offer.request) {
                            if slot.held_by == Some(offer.id) {
                                slot.held_by = None;
                            }
                        }
                    }
                }
            }
            Event::Observation { driver, offer, observation, cell } => {
                self.observed.insert(*offer);
                let rec = self.drivers.get_mut(driver).expect("checked");
                rec.observations += 1;
                if cell.is_some() {
                    rec.network.record_observation(observation).expect("checked");
                }
            }
            Event::TripCompleted(c) => {
                let trip = self.trips.get_mut(&c.trip).expect("checked");
                trip.status = TripStatus::Completed;
                trip.completion = Some(c.as_ref().clone());
                let dropoff: Point = trip.request.dropoff;
                self.ratings.record_trip(CompletedTrip { trip: c.trip, driver: c.driver.clone(), telemetry: c.telemetry });
                let rec = self.drivers.get_mut(&c.driver).expect("checked");
                rec.roll(at);
                rec.state.hours_driven_today += c.hours;
                rec.state.earnings_today += c.breakdown.net;
                rec.state.earnings_week += c.breakdown.net;
                rec.state.location = dropoff;
                match rec.state.queued_trip.take() {
                    Some(next) => {
                        if let Some(t) = self.trips.get_mut(&next) {
                            t.status = TripStatus::Active;
                        }
                    }
                    None => rec.state.on_trip = false,
                }
            }
            Event::Rating(r) => self.ratings.insert_rating(r.as_ref().clone()),
            Event::Dispute(d) => self.ratings.insert_dispute(d.as_ref().clone()),
            Event::Ticket(t) => self.tickets.insert(t.as_ref().clone()),
            Event::Forum { entity, proposal, .. } => {
                self.forum.apply(entity.as_ref().clone());
                if let Some(p) = proposal {
                    self.proposals.push(p.clone());
                }
            }
        }
    }
}
