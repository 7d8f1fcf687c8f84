//! HTTP surface. Drivers authenticate with `Bearer dev-<driver id>`, the
//! operator with the configured operator token. Every write goes through the
//! single platform lock, so the log has exactly one writer.

use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Duration;
use coopride_core::dispatch::{Decision, OfferBundle, OfferOutcome, RideOffer};
use coopride_core::ids::{BundleId, DriverId, OfferId, PollId, RatingId, RequestId, TicketId, TopicId, TripId};
use coopride_core::platform::{earnings_view, network_view, EarningsView, NetworkView, Platform, TripCompletion, TripRecord};
use coopride_core::ratings::{Dispute, Factor, FactorAggregate, LowScoreAlert, RatingRecord, RatingSubmission};
use coopride_core::services::{
    ComplaintTicket, DriverProfile, ForumAction, ForumOutcome, Poll, Post, ProfileChanges, ProfileUpdate, TicketCategory, TicketStatus,
    Topic,
};
use coopride_core::{Cents, DriverState, Point, RideRequest, Timestamp};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::clock::Clock;
use crate::error::ApiError;

/// Prefix of the static per-driver development tokens.
pub const DEV_TOKEN_PREFIX: &str = "dev-";

pub struct AppState {
    platform: Mutex<Platform>,
    clock: Arc<dyn Clock>,
    operator_token: String,
    rng: Mutex<StdRng>,
}

impl AppState {
    pub fn new(platform: Platform, clock: Arc<dyn Clock>, operator_token: impl Into<String>, seed: u64) -> Self {
        Self {
            platform: Mutex::new(platform),
            clock,
            operator_token: operator_token.into(),
            rng: Mutex::new(StdRng::seed_from_u64(seed)),
        }
    }

    pub fn platform(&self) -> MutexGuard<'_, Platform> {
        self.platform.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    /// Expires overdue offers and issues new bundles.
    pub fn dispatch_once(&self) -> Result<Vec<OfferBundle>, ApiError> {
        let now = self.now();
        let mut p = self.platform();
        p.tick(now)?;
        let mut rng = self.rng.lock().unwrap_or_else(|p| p.into_inner());
        Ok(p.dispatch_round(now, &mut *rng)?)
    }
}

type Shared = Arc<AppState>;

fn bearer(parts: &Parts) -> Option<&str> {
    parts.headers.get(header::AUTHORIZATION)?.to_str().ok()?.strip_prefix("Bearer ")
}

/// The authenticated, registered driver.
pub struct AuthDriver(pub DriverId);

impl FromRequestParts<Shared> for AuthDriver {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Shared) -> Result<Self, Self::Rejection> {
        let id = bearer(parts).and_then(|t| t.strip_prefix(DEV_TOKEN_PREFIX)).ok_or_else(ApiError::unauthorized)?;
        let id = DriverId::new(id);
        if state.platform().state().driver(&id).is_none() {
            return Err(ApiError::unauthorized());
        }
        Ok(AuthDriver(id))
    }
}

pub struct Operator;

impl FromRequestParts<Shared> for Operator {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Shared) -> Result<Self, Self::Rejection> {
        match bearer(parts) {
            Some(t) if t == state.operator_token => Ok(Operator),
            _ => Err(ApiError::unauthorized()),
        }
    }
}

pub fn router(state: Shared) -> Router {
    let driver = Router::new()
        .route("/profile", get(get_profile).patch(patch_profile))
        .route("/status", post(post_status))
        .route("/offers", get(get_offers))
        .route("/offers/{id}/decision", post(post_decision))
        .route("/trips", get(get_trips))
        .route("/earnings", get(get_earnings))
        .route("/ratings", get(get_ratings))
        .route("/ratings/{id}/dispute", post(post_dispute))
        .route("/complaints", get(get_complaints).post(post_complaint))
        .route("/forum/topics", get(get_topics))
        .route("/forum/topics/{id}/posts", get(get_posts))
        .route("/forum/polls", get(get_polls))
        .route("/forum", post(post_forum))
        .route("/transparency", get(get_transparency));
    let operator = Router::new()
        .route("/drivers", post(op_register))
        .route("/requests", post(op_request))
        .route("/dispatch", post(op_dispatch))
        .route("/trips/{id}/complete", post(op_complete))
        .route("/trips/{id}/rating", post(op_rate))
        .route("/tickets", get(op_tickets))
        .route("/tickets/{id}/advance", post(op_advance))
        .route("/proposals/{poll}/apply", post(op_apply_proposal))
        .route("/log", get(op_log_position));
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .nest("/api", driver)
        .nest("/operator", operator)
        .with_state(state)
}

async fn get_profile(State(s): State<Shared>, AuthDriver(id): AuthDriver) -> Result<Json<DriverProfile>, ApiError> {
    let p = s.platform();
    let rec = p.state().driver(&id).ok_or_else(ApiError::unauthorized)?;
    Ok(Json(rec.profile.clone()))
}

async fn patch_profile(
    State(s): State<Shared>,
    AuthDriver(id): AuthDriver,
    Json(changes): Json<ProfileChanges>,
) -> Result<Json<ProfileUpdate>, ApiError> {
    let now = s.now();
    Ok(Json(s.platform().update_profile(&id, changes, now)?))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatusChange {
    pub available: Option<bool>,
    pub location: Option<Point>,
}

async fn post_status(
    State(s): State<Shared>,
    AuthDriver(id): AuthDriver,
    Json(change): Json<StatusChange>,
) -> Result<Json<DriverState>, ApiError> {
    let now = s.now();
    let state = s.platform().update_status(&id, now, |st| {
        if let Some(a) = change.available {
            st.available = a;
        }
        if let Some(l) = change.location {
            st.location = l;
        }
    })?;
    Ok(Json(state))
}

/// A pending offer plus the seconds left to answer it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OfferCard {
    pub bundle: BundleId,
    pub remaining_secs: i64,
    pub offer: RideOffer,
}

async fn get_offers(State(s): State<Shared>, AuthDriver(id): AuthDriver) -> Json<Vec<OfferCard>> {
    let now = s.now();
    let p = s.platform();
    let Some(bundle) = p.state().offers().pending_bundle(&id) else {
        return Json(Vec::new());
    };
    let cards = p
        .state()
        .offers()
        .pending_offers(&id)
        .into_iter()
        .filter(|o| o.expires_at > now)
        .map(|o| OfferCard { bundle: bundle.id, remaining_secs: (o.expires_at - now).num_seconds().max(0), offer: o.clone() })
        .collect();
    Json(cards)
}

#[derive(Debug, Deserialize)]
pub struct DecisionBody {
    pub decision: Decision,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DecisionResponse {
    pub outcomes: Vec<OfferOutcome>,
    pub trip: Option<TripRecord>,
}

async fn post_decision(
    State(s): State<Shared>,
    AuthDriver(id): AuthDriver,
    Path(offer): Path<u64>,
    Json(body): Json<DecisionBody>,
) -> Result<Json<DecisionResponse>, ApiError> {
    let now = s.now();
    let mut p = s.platform();
    let outcomes = p.decide(&id, OfferId(offer), body.decision, now)?;
    let trip = outcomes.iter().find_map(|o| o.trip.as_ref()).and_then(|t| p.state().trip(t.trip)).cloned();
    Ok(Json(DecisionResponse { outcomes, trip }))
}

async fn get_trips(State(s): State<Shared>, AuthDriver(id): AuthDriver) -> Json<Vec<TripRecord>> {
    let p = s.platform();
    Json(p.state().trips().filter(|t| t.driver == id).cloned().collect())
}

async fn get_earnings(State(s): State<Shared>, AuthDriver(id): AuthDriver) -> Result<Json<EarningsView>, ApiError> {
    let now = s.now();
    let p = s.platform();
    earnings_view(p.state(), &id, now).map(Json).ok_or_else(|| ApiError::not_found("earnings"))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RatingsView {
    pub ratings: Vec<RatingRecord>,
    pub aggregates: Vec<FactorAggregate>,
    pub alerts: Vec<LowScoreAlert>,
    pub disputes: Vec<Dispute>,
}

async fn get_ratings(State(s): State<Shared>, AuthDriver(id): AuthDriver) -> Result<Json<RatingsView>, ApiError> {
    let p = s.platform();
    let cfg = p.settings().alerts;
    let book = p.state().ratings();
    Ok(Json(RatingsView {
        ratings: book.ratings_for(&id).cloned().collect(),
        aggregates: book.aggregates(&id, &cfg),
        alerts: book.check_low_score_alerts(&id, &cfg).map_err(|e| ApiError::bad_request(e.to_string()))?,
        disputes: book.disputes_for(&id).cloned().collect(),
    }))
}

#[derive(Debug, Deserialize)]
pub struct DisputeBody {
    pub factor: Factor,
}

async fn post_dispute(
    State(s): State<Shared>,
    AuthDriver(id): AuthDriver,
    Path(rating): Path<u64>,
    Json(body): Json<DisputeBody>,
) -> Result<Json<Dispute>, ApiError> {
    let now = s.now();
    Ok(Json(s.platform().dispute_rating(&id, RatingId(rating), body.factor, now)?))
}

#[derive(Debug, Deserialize)]
pub struct ComplaintBody {
    pub category: TicketCategory,
    pub text: String,
}

async fn post_complaint(
    State(s): State<Shared>,
    AuthDriver(id): AuthDriver,
    Json(body): Json<ComplaintBody>,
) -> Result<(StatusCode, Json<ComplaintTicket>), ApiError> {
    let now = s.now();
    let t = s.platform().open_ticket(&id, body.category, &body.text, now)?;
    Ok((StatusCode::CREATED, Json(t)))
}

async fn get_complaints(State(s): State<Shared>, AuthDriver(id): AuthDriver) -> Json<Vec<ComplaintTicket>> {
    let p = s.platform();
    Json(p.state().tickets().for_driver(&id).cloned().collect())
}

#[derive(Debug, Default, Deserialize)]
pub struct TopicQuery {
    /// Subforum to list; absent lists the general forum.
    pub location: Option<String>,
}

async fn get_topics(State(s): State<Shared>, _: AuthDriver, Query(q): Query<TopicQuery>) -> Json<Vec<Topic>> {
    let p = s.platform();
    let forum = p.state().forum();
    Json(match &q.location {
        Some(l) => forum.subforum(l).cloned().collect(),
        None => forum.general().cloned().collect(),
    })
}

async fn get_posts(State(s): State<Shared>, _: AuthDriver, Path(topic): Path<u64>) -> Result<Json<Vec<Post>>, ApiError> {
    let p = s.platform();
    let forum = p.state().forum();
    forum.topic(TopicId(topic)).ok_or_else(|| ApiError::not_found(format!("topic {topic}")))?;
    Ok(Json(forum.posts_in(TopicId(topic)).cloned().collect()))
}

async fn get_polls(State(s): State<Shared>, _: AuthDriver) -> Json<Vec<Poll>> {
    Json(s.platform().state().forum().polls().cloned().collect())
}

async fn post_forum(
    State(s): State<Shared>,
    AuthDriver(id): AuthDriver,
    Json(action): Json<ForumAction>,
) -> Result<Json<ForumOutcome>, ApiError> {
    let now = s.now();
    Ok(Json(s.platform().forum_action(&id, action, now)?))
}

async fn get_transparency(State(s): State<Shared>, AuthDriver(id): AuthDriver) -> Result<Json<NetworkView>, ApiError> {
    let p = s.platform();
    network_view(p.state(), &id).map(Json).ok_or_else(|| ApiError::not_found("driver network"))
}

#[derive(Debug, Deserialize)]
pub struct RegisterBody {
    pub profile: DriverProfile,
    pub location: Point,
}

async fn op_register(State(s): State<Shared>, _: Operator, Json(body): Json<RegisterBody>) -> Result<StatusCode, ApiError> {
    let now = s.now();
    s.platform().register_driver(body.profile, body.location, now)?;
    Ok(StatusCode::CREATED)
}

/// Accepts a ride request; `id` and `requested_at` are filled in when absent.
async fn op_request(State(s): State<Shared>, _: Operator, Json(mut body): Json<Value>) -> Result<Json<RideRequest>, ApiError> {
    let now = s.now();
    let mut p = s.platform();
    let obj = body.as_object_mut().ok_or_else(|| ApiError::bad_request("request must be a JSON object"))?;
    obj.entry("id").or_insert_with(|| Value::from(p.state().last_request_id() + 1));
    obj.entry("requested_at").or_insert_with(|| Value::from(now.to_rfc3339()));
    let request: RideRequest = serde_json::from_value(body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    if request.id <= RequestId(p.state().last_request_id()) {
        return Err(ApiError::new(StatusCode::CONFLICT, "conflict", format!("request id {} already used", request.id)));
    }
    p.submit_request(request.clone(), now)?;
    Ok(Json(request))
}

async fn op_dispatch(State(s): State<Shared>, _: Operator) -> Result<Json<Vec<OfferBundle>>, ApiError> {
    Ok(Json(s.dispatch_once()?))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct CompleteBody {
    pub arrived_at: Option<Timestamp>,
    pub tip: Cents,
}

async fn op_complete(
    State(s): State<Shared>,
    _: Operator,
    Path(trip): Path<u64>,
    Json(body): Json<CompleteBody>,
) -> Result<Json<TripCompletion>, ApiError> {
    let now = s.now();
    Ok(Json(s.platform().complete_trip(TripId(trip), now, body.arrived_at, body.tip)?))
}

async fn op_rate(
    State(s): State<Shared>,
    _: Operator,
    Path(trip): Path<u64>,
    Json(body): Json<RatingSubmission>,
) -> Result<(StatusCode, Json<RatingRecord>), ApiError> {
    let now = s.now();
    let r = s.platform().submit_rating(TripId(trip), &body, now)?;
    Ok((StatusCode::CREATED, Json(r)))
}

async fn op_tickets(State(s): State<Shared>, _: Operator) -> Json<Vec<ComplaintTicket>> {
    Json(s.platform().state().tickets().iter().cloned().collect())
}

#[derive(Debug, Deserialize)]
pub struct AdvanceBody {
    pub status: TicketStatus,
}

async fn op_advance(
    State(s): State<Shared>,
    _: Operator,
    Path(ticket): Path<u64>,
    Json(body): Json<AdvanceBody>,
) -> Result<Json<ComplaintTicket>, ApiError> {
    let now = s.now();
    Ok(Json(s.platform().advance_ticket(TicketId(ticket), body.status, now)?))
}

async fn op_apply_proposal(State(s): State<Shared>, _: Operator, Path(poll): Path<u64>) -> Result<Json<Value>, ApiError> {
    let now = s.now();
    let settings = s.platform().apply_proposal(PollId(poll), now)?;
    Ok(Json(serde_json::to_value(settings.matching).map_err(|e| ApiError::bad_request(e.to_string()))?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LogPosition {
    pub last_seq: u64,
    pub last_at: Option<Timestamp>,
}

async fn op_log_position(State(s): State<Shared>, _: Operator) -> Json<LogPosition> {
    let p = s.platform();
    Json(LogPosition { last_seq: p.state().last_seq(), last_at: p.state().last_at() })
}

/// How often `serve` runs a dispatch round.
pub fn dispatch_interval() -> Duration {
    Duration::seconds(2)
}
