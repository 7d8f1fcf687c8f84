use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chrono::Duration;
use coopride_cli::{router, AppState, ManualClock};
use coopride_core::platform::{Event, MemoryLog, Platform, Settings};
use coopride_core::sim::plain_profile;
use coopride_core::time::at;
use coopride_core::DriverId;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const OPERATOR: &str = "op-secret";

struct Harness {
    app: Router,
    clock: Arc<ManualClock>,
    log: MemoryLog,
    state: Arc<AppState>,
}

impl Harness {
    fn new() -> Self {
        let t0 = at("2024-06-03T09:00:00Z");
        let log = MemoryLog::new();
        let platform = Platform::create(Box::new(log.clone()), Settings::default(), t0).unwrap();
        let clock = Arc::new(ManualClock::new(t0));
        let state = Arc::new(AppState::new(platform, clock.clone(), OPERATOR, 7));
        Self { app: router(state.clone()), clock, log, state }
    }

    async fn call(&self, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
        (status, value)
    }

    async fn register(&self, id: &str) {
        let profile = serde_json::to_value(plain_profile(DriverId::new(id))).unwrap();
        let (s, _) = self.call(Method::POST, "/operator/drivers", Some(OPERATOR), Some(json!({"profile": profile, "location": {"x": 10.0, "y": 10.0}}))).await;
        assert_eq!(s, StatusCode::CREATED);
    }

    async fn request(&self) -> Value {
        let body = json!({
            "pickup": {"x": 10.5, "y": 10.0},
            "dropoff": {"x": 14.0, "y": 12.0},
            "duration_minutes": 15.0,
            "distance_km": 5.0,
            "destination": "downtown",
            "rider_rating": 4.8,
            "fare": 1500
        });
        let (s, v) = self.call(Method::POST, "/operator/requests", Some(OPERATOR), Some(body)).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        v
    }

    async fn dispatch(&self) -> Value {
        let (s, v) = self.call(Method::POST, "/operator/dispatch", Some(OPERATOR), None).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        v
    }
}

#[tokio::test]
async fn tokens_are_checked() {
    let h = Harness::new();
    h.register("d001").await;
    assert_eq!(h.call(Method::GET, "/api/profile", None, None).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(h.call(Method::GET, "/api/profile", Some("dev-d999"), None).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(h.call(Method::POST, "/operator/dispatch", Some("dev-d001"), None).await.0, StatusCode::UNAUTHORIZED);
    let (s, v) = h.call(Method::GET, "/api/profile", Some("dev-d001"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["driver_id"], "d001");
}

#[tokio::test]
async fn accept_then_repeat_is_a_conflict() {
    let h = Harness::new();
    h.register("d001").await;
    h.request().await;
    h.dispatch().await;
    let (_, cards) = h.call(Method::GET, "/api/offers", Some("dev-d001"), None).await;
    let cards = cards.as_array().unwrap();
    assert_eq!(cards.len(), 1);
    assert!(cards[0]["remaining_secs"].as_i64().unwrap() > 45);
    let offer = cards[0]["offer"]["id"].as_u64().unwrap();

    // The transparency view shows the very probability the offer carried.
    let (_, view) = h.call(Method::GET, "/api/transparency", Some("dev-d001"), None).await;
    assert_eq!(view["last_offer"]["probability"].to_string(), cards[0]["offer"]["probability"].to_string());
    assert_eq!(view["last_offer"]["incentive"], cards[0]["offer"]["incentive"]);

    let uri = format!("/api/offers/{offer}/decision");
    let (s, v) = h.call(Method::POST, &uri, Some("dev-d001"), Some(json!({"decision": "accept"}))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["trip"]["driver"], "d001");
    let (s, v) = h.call(Method::POST, &uri, Some("dev-d001"), Some(json!({"decision": "accept"}))).await;
    assert_eq!(s, StatusCode::CONFLICT, "{v}");
    assert_eq!(v["error"], "conflict");

    // The offer probability in the log matches the API byte for byte.
    let logged = h.log.records().into_iter().find_map(|r| match r.event {
        Event::OfferIssued(b) => Some(serde_json::to_value(&b.offers[0]).unwrap()),
        _ => None,
    });
    assert_eq!(logged.unwrap()["probability"].to_string(), cards[0]["offer"]["probability"].to_string());
}

#[tokio::test]
async fn late_decision_is_gone_and_logged_as_expired() {
    let h = Harness::new();
    h.register("d001").await;
    h.request().await;
    h.dispatch().await;
    let (_, cards) = h.call(Method::GET, "/api/offers", Some("dev-d001"), None).await;
    let offer = cards[0]["offer"]["id"].as_u64().unwrap();
    h.clock.advance(Duration::minutes(10));
    let (_, cards) = h.call(Method::GET, "/api/offers", Some("dev-d001"), None).await;
    assert_eq!(cards, json!([]));
    let (s, v) = h.call(Method::POST, &format!("/api/offers/{offer}/decision"), Some("dev-d001"), Some(json!({"decision": "accept"}))).await;
    assert_eq!(s, StatusCode::GONE, "{v}");
    let expired = h.log.records().into_iter().any(|r| matches!(&r.event, Event::OfferResolved(o) if o.offer.0 == offer && o.state == coopride_core::dispatch::OfferState::Expired));
    assert!(expired);
}

#[tokio::test]
async fn trip_earnings_rating_and_dispute() {
    let h = Harness::new();
    h.register("d001").await;
    h.request().await;
    h.dispatch().await;
    let (_, cards) = h.call(Method::GET, "/api/offers", Some("dev-d001"), None).await;
    let offer = cards[0]["offer"]["id"].as_u64().unwrap();
    let (_, v) = h.call(Method::POST, &format!("/api/offers/{offer}/decision"), Some("dev-d001"), Some(json!({"decision": "accept"}))).await;
    let trip = v["trip"]["trip"].as_u64().unwrap();
    let promised = v["trip"]["promised_pickup"].clone();

    h.clock.advance(Duration::minutes(30));
    let (s, done) = h.call(Method::POST, &format!("/operator/trips/{trip}/complete"), Some(OPERATOR), Some(json!({"arrived_at": promised, "tip": 200}))).await;
    assert_eq!(s, StatusCode::OK, "{done}");
    let (_, earnings) = h.call(Method::GET, "/api/earnings", Some("dev-d001"), None).await;
    let b = &earnings["trips"][0]["breakdown"];
    assert_eq!(b, &done["breakdown"]);
    let n = |k: &str| b[k].as_i64().unwrap();
    assert_eq!(n("net"), n("fare") + n("incentive") + n("tip") - n("tco"));

    let labels = json!({"labels": {"punctuality": "Very dissatisfied", "politeness": "Very satisfied"}});
    let (s, rating) = h.call(Method::POST, &format!("/operator/trips/{trip}/rating"), Some(OPERATOR), Some(labels.clone())).await;
    assert_eq!(s, StatusCode::CREATED, "{rating}");
    assert_eq!(h.call(Method::POST, &format!("/operator/trips/{trip}/rating"), Some(OPERATOR), Some(labels)).await.0, StatusCode::CONFLICT);
    let rid = rating["id"].as_u64().unwrap();
    let uri = format!("/api/ratings/{rid}/dispute");
    let (s, _) = h.call(Method::POST, &uri, Some("dev-d001"), Some(json!({"factor": "politeness"}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, d) = h.call(Method::POST, &uri, Some("dev-d001"), Some(json!({"factor": "punctuality"}))).await;
    assert_eq!(s, StatusCode::OK, "{d}");
    assert_eq!(d["status"], "upheld");
    let (_, ratings) = h.call(Method::GET, "/api/ratings", Some("dev-d001"), None).await;
    assert_eq!(ratings["ratings"][0]["status"], "excluded");
}

#[tokio::test]
async fn profile_locks_are_disclosed() {
    let h = Harness::new();
    h.register("d001").await;
    let change = json!({"destination_filter": ["airport"]});
    let (s, v) = h.call(Method::PATCH, "/api/profile", Some("dev-d001"), Some(change.clone())).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["lock_window_secs"], 7 * 86_400);
    h.clock.advance(Duration::days(1));
    let (s, v) = h.call(Method::PATCH, "/api/profile", Some("dev-d001"), Some(change)).await;
    assert_eq!(s, StatusCode::LOCKED, "{v}");
    assert_eq!(v["error"], "settings_locked");
    let (s, _) = h.call(Method::POST, "/api/status", Some("dev-d001"), Some(json!({"available": false}))).await;
    assert_eq!(s, StatusCode::OK);
    h.request().await;
    assert_eq!(h.dispatch().await, json!([]));
}

#[tokio::test]
async fn complaints_follow_their_lifecycle() {
    let h = Harness::new();
    h.register("d001").await;
    let (s, t) = h.call(Method::POST, "/api/complaints", Some("dev-d001"), Some(json!({"category": "safety", "text": "unsafe pickup spot"}))).await;
    assert_eq!(s, StatusCode::CREATED, "{t}");
    assert_eq!(t["status"], "open");
    let opened = coopride_core::time::at(t["opened_at"].as_str().unwrap());
    assert_eq!(coopride_core::time::at(t["expected_completion"].as_str().unwrap()) - opened, Duration::hours(24));
    let (s, _) = h.call(Method::POST, "/api/complaints", Some("dev-d001"), Some(json!({"category": "pay", "text": " "}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let id = t["id"].as_u64().unwrap();
    let advance = |status: &str| json!({ "status": status });
    assert_eq!(h.call(Method::POST, &format!("/operator/tickets/{id}/advance"), Some(OPERATOR), Some(advance("resolved"))).await.0, StatusCode::CONFLICT);
    h.clock.advance(Duration::hours(1));
    let (s, v) = h.call(Method::POST, &format!("/operator/tickets/{id}/advance"), Some(OPERATOR), Some(advance("in_review"))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let (_, list) = h.call(Method::GET, "/api/complaints", Some("dev-d001"), None).await;
    assert_eq!(list[0]["status"], "in_review");
}

#[tokio::test]
async fn forum_subforums_and_revotes() {
    let h = Harness::new();
    h.register("d001").await;
    h.register("d002").await;
    let post = |who: &'static str, body: Value| h.call(Method::POST, "/api/forum", Some(who), Some(body));
    let (s, v) = post("dev-d001", json!({"action": "create_topic", "title": "Airport queue", "location": "NYC"})).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let (_, nyc) = h.call(Method::GET, "/api/forum/topics?location=NYC", Some("dev-d002"), None).await;
    assert_eq!(nyc.as_array().unwrap().len(), 1);
    let (_, general) = h.call(Method::GET, "/api/forum/topics", Some("dev-d002"), None).await;
    assert_eq!(general, json!([]));

    let (_, poll) = post("dev-d001", json!({"action": "create_poll", "question": "Longer offer window?", "options": ["yes", "no"]})).await;
    let pid = poll["entity"]["id"].as_u64().unwrap();
    post("dev-d002", json!({"action": "vote", "poll": pid, "option": 0})).await;
    post("dev-d002", json!({"action": "vote", "poll": pid, "option": 1})).await;
    let (_, polls) = h.call(Method::GET, "/api/forum/polls", Some("dev-d001"), None).await;
    let votes = polls[0]["votes"].as_object().unwrap();
    assert_eq!(votes.len(), 1);
    assert_eq!(votes["d002"], 1);
    let (s, _) = post("dev-d002", json!({"action": "vote", "poll": pid, "option": 5})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn dispatch_helper_shares_the_platform() {
    let h = Harness::new();
    h.register("d001").await;
    h.request().await;
    let bundles = h.state.dispatch_once().unwrap();
    assert_eq!(bundles.len(), 1);
    assert_eq!(h.state.platform().state().offers().pending_offers(&DriverId::new("d001")).len(), 1);
}
