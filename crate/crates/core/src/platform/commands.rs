use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::RngCore;
use thiserror::Error;

use super::{
    read_log, ApplyError, Event, EventRecord, EventSink, FileLog, PlatformState, Settings, Snapshot, StorageError,
    TripCompletion, TripStatus, LOG_FILE, SCHEMA_VERSION, SNAPSHOT_FILE,
};
use crate::bbn::{BayesNetwork, BbnError, DEFAULT_ESS, DEFAULT_SMOOTHING};
use crate::context::{driver_network, elicitation_preferences};
use crate::dispatch::{
    bundle_options, check_constraints, explain_offer, score_offer, Decision, DispatchError, DriverState, Eligibility, OfferBundle, OfferOutcome,
    RideRequest,
};
use crate::earnings::{compute_trip_cost, EarningsError};
use crate::geo::Point;
use crate::ids::{DisputeId, DriverId, OfferId, PollId, TicketId, TripId};
use crate::money::Cents;
use crate::ratings::{Dispute, DisputeStatus, Factor, RatingError, RatingRecord, RatingSubmission, TripTelemetry};
use crate::services::{
    open_complaint, update_profile, ComplaintTicket, ConfigKey, DriverProfile, ForumAction, ForumError, ForumOutcome, ProfileChanges,
    ProfileError, ProfileUpdate, TicketCategory, TicketError, TicketStatus,
};
use crate::time::Timestamp;

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error("platform is read-only after a storage failure")]
    Poisoned,
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("event rejected: {0}")]
    Rejected(#[from] ApplyError),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("offer {0} expired before the decision")]
    Expired(OfferId),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Dispatch(DispatchError),
    #[error(transparent)]
    Rating(#[from] RatingError),
    #[error(transparent)]
    Ticket(#[from] TicketError),
    #[error(transparent)]
    Forum(#[from] ForumError),
    #[error(transparent)]
    Network(#[from] BbnError),
    #[error(transparent)]
    Earnings(#[from] EarningsError),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl From<DispatchError> for PlatformError {
    fn from(e: DispatchError) -> Self {
        match e {
            DispatchError::AlreadyResolved(id) => PlatformError::Conflict(format!("offer {id} is already resolved")),
            DispatchError::UnknownOffer(id) => PlatformError::NotFound(format!("offer {id}")),
            DispatchError::DecisionAfterExpiry { offer, .. } => PlatformError::Expired(offer),
            other => PlatformError::Dispatch(other),
        }
    }
}

/// Live platform: state plus the sink every event is written to first.
pub struct Platform {
    state: PlatformState,
    sink: Box<dyn EventSink>,
    poisoned: bool,
}

impl std::fmt::Debug for Platform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Platform").field("last_seq", &self.state.last_seq()).field("poisoned", &self.poisoned).finish()
    }
}

/// Rebuilds state from an optional snapshot plus the log records after it.
pub fn recover(records: &[EventRecord], snapshot: Option<Snapshot>) -> Result<PlatformState, ApplyError> {
    let mut state = snapshot.map(|s| s.state).unwrap_or_default();
    let from = state.last_seq();
    for r in records.iter().filter(|r| r.seq > from) {
        state.apply(r)?;
    }
    Ok(state)
}

impl Platform {
    /// A fresh platform whose first event records `settings`.
    pub fn create(sink: Box<dyn EventSink>, settings: Settings, clock: Timestamp) -> Result<Self, PlatformError> {
        let mut p = Self { state: PlatformState::new(), sink, poisoned: false };
        p.commit(clock, Event::ConfigChange(Box::new(settings)))?;
        Ok(p)
    }

    /// Wraps already-recovered state; new events go to `sink`.
    pub fn resume(state: PlatformState, sink: Box<dyn EventSink>) -> Self {
        Self { state, sink, poisoned: false }
    }

    /// Opens the data directory: recovers from snapshot plus log if a log
    /// exists, otherwise starts a new log. Differing settings are recorded
    /// as a configuration change.
    pub fn open_dir(dir: &Path, settings: Settings, clock: Timestamp) -> Result<Self, PlatformError> {
        std::fs::create_dir_all(dir).map_err(StorageError::from)?;
        let log_path = dir.join(LOG_FILE);
        let records = read_log(&log_path)?;
        let snapshot = Snapshot::load(&dir.join(SNAPSHOT_FILE))?.filter(|s| s.last_seq <= records.len() as u64);
        let sink = Box::new(FileLog::open(&log_path)?);
        if records.is_empty() {
            return Self::create(sink, settings, clock);
        }
        let state = recover(&records, snapshot)?;
        let mut p = Self::resume(state, sink);
        if p.state.settings() != Some(&settings) {
            let at = p.state.last_at().map_or(clock, |l| l.max(clock));
            p.commit(at, Event::ConfigChange(Box::new(settings)))?;
        }
        Ok(p)
    }

    /// `clock`, moved forward to the last event time if it lags behind.
    pub fn now(&self, clock: Timestamp) -> Timestamp {
        self.state.last_at().map_or(clock, |last| clock.max(last))
    }

    pub fn state(&self) -> &PlatformState {
        &self.state
    }

    pub fn settings(&self) -> &Settings {
        self.state.settings().expect("platform is configured at creation")
    }

    pub fn is_poisoned(&self) -> bool {
        self.poisoned
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::of(&self.state)
    }

    /// Validates, persists, then applies one event.
    pub fn commit(&mut self, at: Timestamp, event: Event) -> Result<EventRecord, PlatformError> {
        if self.poisoned {
            return Err(PlatformError::Poisoned);
        }
        let at = self.state.last_at().map_or(at, |last| at.max(last));
        let record = EventRecord { v: SCHEMA_VERSION, seq: self.state.last_seq() + 1, at, event };
        self.state.check(&record)?;
        if let Err(e) = self.sink.append(&record) {
            self.poisoned = true;
            return Err(e.into());
        }
        self.state.apply(&record).expect("checked before persisting");
        Ok(record)
    }

    fn driver(&self, id: &DriverId) -> Result<&super::DriverRecord, PlatformError> {
        self.state.driver(id).ok_or_else(|| PlatformError::NotFound(format!("driver {id}")))
    }

    pub fn register_driver(&mut self, profile: DriverProfile, location: Point, clock: Timestamp) -> Result<(), PlatformError> {
        let clock = self.now(clock);
        if self.state.driver(&profile.driver_id).is_some() {
            return Err(PlatformError::Conflict(format!("driver {} already registered", profile.driver_id)));
        }
        profile.validate()?;
        let network = if self.settings().uses_default_network() {
            driver_network(&profile)?
        } else {
            let mut net = BayesNetwork::build(self.settings().network.clone(), DEFAULT_SMOOTHING)?;
            let prefs = elicitation_preferences(&net, &profile);
            net.elicit_priors(&prefs, DEFAULT_ESS)?;
            net
        };
        self.register_driver_with_network(profile, location, network, clock)
    }

    /// Registers a driver with a ready-made network, e.g. one carried over
    /// from another deployment. It must follow the configured spec.
    pub fn register_driver_with_network(
        &mut self,
        profile: DriverProfile,
        location: Point,
        network: BayesNetwork,
        clock: Timestamp,
    ) -> Result<(), PlatformError> {
        let clock = self.now(clock);
        if self.state.driver(&profile.driver_id).is_some() {
            return Err(PlatformError::Conflict(format!("driver {} already registered", profile.driver_id)));
        }
        let state = DriverState::idle(profile.driver_id.clone(), location);
        self.commit(clock, Event::DriverRegistered { profile: Box::new(profile), state, network: Box::new(network) })?;
        Ok(())
    }

    pub fn update_profile(&mut self, driver: &DriverId, changes: ProfileChanges, clock: Timestamp) -> Result<ProfileUpdate, PlatformError> {
        let clock = self.now(clock);
        let rec = self.driver(driver)?;
        if changes.is_empty() {
            return Err(PlatformError::Invalid("no changes given".into()));
        }
        let update = update_profile(&rec.profile, &changes, clock, self.settings().lock_window())?;
        self.commit(
            clock,
            Event::ProfileUpdated { driver: driver.clone(), changes: Box::new(changes), update: Box::new(update.clone()) },
        )?;
        Ok(update)
    }

    /// Changes availability, location or hours; trip fields are kept as they are.
    pub fn update_status(
        &mut self,
        driver: &DriverId,
        clock: Timestamp,
        change: impl FnOnce(&mut DriverState),
    ) -> Result<DriverState, PlatformError> {
        let clock = self.now(clock);
        let rec = self.driver(driver)?;
        let mut state = rec.state_at(clock);
        change(&mut state);
        state.on_trip = rec.state.on_trip;
        state.queued_trip = rec.state.queued_trip;
        state.driver_id = driver.clone();
        self.commit(clock, Event::DriverStatus(state.clone()))?;
        Ok(state)
    }

    pub fn submit_request(&mut self, request: RideRequest, clock: Timestamp) -> Result<(), PlatformError> {
        let clock = self.now(clock);
        request.validate()?;
        self.commit(clock, Event::RequestReceived(Box::new(request)))?;
        Ok(())
    }

    fn commit_outcome(&mut self, out: &OfferOutcome, clock: Timestamp) -> Result<(), PlatformError> {
        self.commit(clock, Event::OfferResolved(Box::new(out.clone())))?;
        if let Some(obs) = &out.observation {
            let cell = if self.settings().learning_enabled {
                Some(self.driver(&out.driver)?.network.observation_cell(obs)?)
            } else {
                None
            };
            self.commit(
                clock,
                Event::Observation { driver: out.driver.clone(), offer: out.offer, observation: Box::new(obs.clone()), cell },
            )?;
        }
        Ok(())
    }

    /// Expires overdue offers and drops requests nobody took in time.
    pub fn tick(&mut self, clock: Timestamp) -> Result<Vec<OfferOutcome>, PlatformError> {
        let clock = self.now(clock);
        let outcomes = self.state.offers().plan_expiry(clock);
        for out in &outcomes {
            self.commit_outcome(out, clock)?;
        }
        let ttl = chrono::Duration::seconds(self.settings().matching.request_ttl_secs);
        let stale: Vec<_> = self
            .state
            .open_requests()
            .filter(|s| s.held_by.is_none() && clock - s.request.requested_at >= ttl)
            .map(|s| s.request.id)
            .collect();
        for request in stale {
            self.commit(clock, Event::RequestDropped { request })?;
        }
        Ok(outcomes)
    }

    /// Offers open requests to every driver able to take one. Drivers are
    /// visited in an order shuffled by `rng`; each gets at most one bundle
    /// and a request goes to at most one driver at a time.
    pub fn dispatch_round(&mut self, clock: Timestamp, rng: &mut dyn RngCore) -> Result<Vec<OfferBundle>, PlatformError> {
        let clock = self.now(clock);
        let cfg = self.settings().matching;
        let fallback = chrono::Duration::seconds(cfg.fallback_after_secs);
        let mut order: Vec<DriverId> = self.state.drivers().map(|(id, _)| id.clone()).collect();
        order.shuffle(rng);
        let mut claimed = BTreeSet::new();
        let mut issued = Vec::new();
        for id in order {
            let rec = self.state.driver(&id).expect("listed");
            let now = rec.state_at(clock);
            if !now.available || !now.has_capacity(&rec.profile) || self.state.offers().pending_bundle(&id).is_some() {
                continue;
            }
            let mut candidates: Vec<(RideRequest, Vec<crate::dispatch::ViolatedPreference>)> = Vec::new();
            for slot in self.state.open_requests() {
                if slot.held_by.is_some() || slot.offered_to.contains(&id) || claimed.contains(&slot.request.id) {
                    continue;
                }
                match check_constraints(&slot.request, &rec.profile, &now, &cfg, clock) {
                    Eligibility::Eligible => candidates.push((slot.request.clone(), Vec::new())),
                    Eligibility::Violates(v) if clock - slot.request.requested_at >= fallback => {
                        candidates.push((slot.request.clone(), v))
                    }
                    _ => {}
                }
            }
            if candidates.is_empty() {
                continue;
            }
            if rec.profile.assignment == crate::services::AssignmentMode::Random {
                candidates.shuffle(rng);
                candidates.truncate(cfg.bundle_size);
            }
            let mut offers = Vec::with_capacity(candidates.len());
            for (req, violated) in candidates {
                offers.push(score_offer(OfferId(0), &req, &rec.profile, &now, &rec.network, &cfg, violated, clock)?);
            }
            let mut bundle = bundle_options(self.state.offers().next_bundle_id(), &id, offers, &cfg)?;
            let first = self.state.offers().next_offer_id().0;
            for (i, o) in bundle.offers.iter_mut().enumerate() {
                o.id = OfferId(first + i as u64);
                explain_offer(o, &rec.network)?;
            }
            claimed.extend(bundle.offers.iter().map(|o| o.request));
            self.commit(clock, Event::OfferIssued(Box::new(bundle.clone())))?;
            issued.push(bundle);
        }
        Ok(issued)
    }

    /// Records the driver's decision. Late decisions record the expiry and
    /// fail with [`PlatformError::Expired`].
    pub fn decide(
        &mut self,
        driver: &DriverId,
        offer: OfferId,
        decision: Decision,
        clock: Timestamp,
    ) -> Result<Vec<OfferOutcome>, PlatformError> {
        let clock = self.now(clock);
        match self.state.offers().offer(offer) {
            Some(o) if &o.driver == driver => {}
            _ => return Err(PlatformError::NotFound(format!("offer {offer}"))),
        }
        match self.state.offers().plan_decision(offer, decision, clock) {
            Ok(outcomes) => {
                for out in &outcomes {
                    self.commit_outcome(out, clock)?;
                }
                Ok(outcomes)
            }
            Err(DispatchError::DecisionAfterExpiry { offer, outcomes }) => {
                for out in &outcomes {
                    self.commit_outcome(out, clock)?;
                }
                Err(PlatformError::Expired(offer))
            }
            Err(e) => Err(e.into()),
        }
    }

    pub fn complete_trip(
        &mut self,
        trip: TripId,
        clock: Timestamp,
        arrived_at: Option<Timestamp>,
        tip: Cents,
    ) -> Result<TripCompletion, PlatformError> {
        let clock = self.now(clock);
        let rec = self.state.trip(trip).ok_or_else(|| PlatformError::NotFound(format!("trip {trip}")))?;
        if rec.status != TripStatus::Active {
            return Err(PlatformError::Conflict(format!("trip {trip} is not active")));
        }
        let hours = rec.request.duration_minutes / 60.0;
        let breakdown =
            compute_trip_cost(&self.settings().costs, rec.request.distance_km, hours, rec.request.fare, rec.incentive, tip)?;
        let completion = TripCompletion {
            trip,
            driver: rec.driver.clone(),
            telemetry: TripTelemetry { promised_pickup: rec.promised_pickup, arrived_at },
            hours,
            tip,
            breakdown,
        };
        self.commit(clock, Event::TripCompleted(Box::new(completion.clone())))?;
        Ok(completion)
    }

    pub fn submit_rating(&mut self, trip: TripId, submission: &RatingSubmission, clock: Timestamp) -> Result<RatingRecord, PlatformError> {
        let at = self.state.last_at().map_or(clock, |l| l.max(clock));
        let record = self.state.ratings().prepare_rating(trip, submission, at)?;
        self.commit(at, Event::Rating(Box::new(record.clone())))?;
        Ok(record)
    }

    /// Files a dispute and settles it from telemetry when telemetry exists.
    pub fn dispute_rating(
        &mut self,
        driver: &DriverId,
        rating: crate::ids::RatingId,
        factor: Factor,
        clock: Timestamp,
    ) -> Result<Dispute, PlatformError> {
        match self.state.ratings().rating(rating) {
            Some(r) if &r.driver == driver => {}
            _ => return Err(PlatformError::NotFound(format!("rating {rating}"))),
        }
        let at = self.state.last_at().map_or(clock, |l| l.max(clock));
        let filed = self.state.ratings().prepare_dispute(rating, factor, at)?;
        self.commit(at, Event::Dispute(Box::new(filed.clone())))?;
        self.resolve_dispute(filed.id, at).or_else(|e| match e {
            PlatformError::Rating(RatingError::MissingTelemetry(_)) => Ok(filed),
            other => Err(other),
        })
    }

    pub fn resolve_dispute(&mut self, id: DisputeId, clock: Timestamp) -> Result<Dispute, PlatformError> {
        let clock = self.now(clock);
        let judged = self.state.ratings().judge_dispute(id)?;
        debug_assert_ne!(judged.status, DisputeStatus::Filed);
        self.commit(clock, Event::Dispute(Box::new(judged.clone())))?;
        Ok(judged)
    }

    pub fn open_ticket(
        &mut self,
        driver: &DriverId,
        category: TicketCategory,
        text: &str,
        clock: Timestamp,
    ) -> Result<ComplaintTicket, PlatformError> {
        self.driver(driver)?;
        let at = self.state.last_at().map_or(clock, |l| l.max(clock));
        let ticket = open_complaint(self.state.tickets().next_id(), driver.clone(), category, text, at, &self.settings().sla)?;
        self.commit(at, Event::Ticket(Box::new(ticket.clone())))?;
        Ok(ticket)
    }

    pub fn advance_ticket(&mut self, id: TicketId, status: TicketStatus, clock: Timestamp) -> Result<ComplaintTicket, PlatformError> {
        let clock = self.now(clock);
        let t = self.state.tickets().get(id).ok_or(TicketError::UnknownTicket(id))?;
        let next = t.advance(status, clock)?;
        self.commit(clock, Event::Ticket(Box::new(next.clone())))?;
        Ok(next)
    }

    pub fn forum_action(&mut self, actor: &DriverId, action: ForumAction, clock: Timestamp) -> Result<ForumOutcome, PlatformError> {
        self.driver(actor)?;
        let at = self.state.last_at().map_or(clock, |l| l.max(clock));
        let out = self.state.forum().plan(actor, &action, at)?;
        self.commit(
            at,
            Event::Forum {
                actor: actor.clone(),
                action: Box::new(action),
                entity: Box::new(out.entity.clone()),
                proposal: out.proposal.clone(),
            },
        )?;
        Ok(out)
    }

    pub fn change_settings(&mut self, settings: Settings, clock: Timestamp) -> Result<(), PlatformError> {
        let clock = self.now(clock);
        settings.validate().map_err(|e| PlatformError::Invalid(e.to_string()))?;
        self.commit(clock, Event::ConfigChange(Box::new(settings)))?;
        Ok(())
    }

    /// Operator action: adopts the value proposed by a closed config poll.
    pub fn apply_proposal(&mut self, poll: PollId, clock: Timestamp) -> Result<Settings, PlatformError> {
        let clock = self.now(clock);
        let p = self
            .state
            .proposals()
            .iter()
            .find(|p| p.poll == poll)
            .ok_or_else(|| PlatformError::NotFound(format!("proposal from poll {poll}")))?
            .clone();
        let mut s = self.settings().clone();
        match p.key {
            ConfigKey::IncentiveThreshold => s.matching.incentive_threshold = p.value,
            ConfigKey::IncentiveScale => s.matching.incentive_scale = p.value,
            ConfigKey::OfferWindowSecs => s.matching.offer_window_secs = p.value.round() as i64,
        }
        self.change_settings(s.clone(), clock)?;
        Ok(s)
    }
}
