//! Factor-based Likert ratings with optional prompted feedback, rolling
//! low-score alerts, and telemetry-backed disputes.

use std::collections::BTreeMap;

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{DisputeId, DriverId, RatingId, TripId};
use crate::time::Timestamp;

/// The five satisfaction anchors, lowest first.
pub const LIKERT_LABELS: [&str; 5] = [
    "Very dissatisfied",
    "Somewhat dissatisfied",
    "Neither dissatisfied or satisfied",
    "Somewhat satisfied",
    "Very satisfied",
];

/// Lateness tolerated before a punctuality complaint stands.
pub const PUNCTUALITY_GRACE_MINUTES: i64 = 3;

pub fn likert_value(label: &str) -> Result<u8, RatingError> {
    LIKERT_LABELS
        .iter()
        .position(|l| *l == label)
        .map(|i| i as u8 + 1)
        .ok_or_else(|| RatingError::UnknownLabel(label.to_owned()))
}

pub fn likert_label(score: u8) -> Option<&'static str> {
    LIKERT_LABELS.get(usize::from(score).checked_sub(1)?).copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Cleanliness,
    Politeness,
    Punctuality,
    Navigation,
    /// Also stands in for emotional labor.
    Conversation,
}

impl Factor {
    pub const ALL: [Factor; 5] =
        [Factor::Cleanliness, Factor::Politeness, Factor::Punctuality, Factor::Navigation, Factor::Conversation];

    /// Whether trip telemetry can settle a dispute on this factor.
    pub fn is_verifiable(self) -> bool {
        matches!(self, Factor::Punctuality)
    }

    pub fn label(self) -> &'static str {
        match self {
            Factor::Cleanliness => "cleanliness",
            Factor::Politeness => "politeness",
            Factor::Punctuality => "punctuality",
            Factor::Navigation => "navigation",
            Factor::Conversation => "conversation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatingStatus {
    Active,
    Disputed,
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    pub prompt_id: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub id: RatingId,
    pub trip: TripId,
    pub driver: DriverId,
    pub scores: BTreeMap<Factor, u8>,
    pub feedback: Option<Feedback>,
    pub created_at: Timestamp,
    pub status: RatingStatus,
}

impl RatingRecord {
    /// Excluded records stay stored but never count.
    pub fn counts(&self) -> bool {
        self.status != RatingStatus::Excluded
    }
}

/// What a rider submits: one Likert label per rated factor.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingSubmission {
    pub labels: BTreeMap<Factor, String>,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub prompt_id: Option<String>,
}

/// Arrival data recorded when a trip completes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripTelemetry {
    pub promised_pickup: Timestamp,
    pub arrived_at: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletedTrip {
    pub trip: TripId,
    pub driver: DriverId,
    pub telemetry: TripTelemetry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisputeStatus {
    Filed,
    Upheld,
    Denied,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dispute {
    pub id: DisputeId,
    pub rating: RatingId,
    pub factor: Factor,
    pub evidence_ref: String,
    pub status: DisputeStatus,
    pub resolution_note: Option<String>,
    pub filed_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlertConfig {
    pub window: usize,
    pub min_count: usize,
    pub threshold: f64,
}

impl Default for AlertConfig {
    fn default() -> Self {
        Self { window: 10, min_count: 5, threshold: 3.0 }
    }
}

impl AlertConfig {
    pub fn validate(&self) -> Result<(), RatingError> {
        if self.min_count >= 1 && self.window >= self.min_count && self.threshold.is_finite() {
            Ok(())
        } else {
            Err(RatingError::InvalidConfig)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorAggregate {
    pub factor: Factor,
    pub window: usize,
    pub mean: Option<f64>,
    pub count: usize,
    pub alert: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowScoreAlert {
    pub factor: Factor,
    pub mean: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RatingError {
    #[error("unknown likert label {0:?}")]
    UnknownLabel(String),
    #[error("trip {0} already rated")]
    DuplicateRating(TripId),
    #[error("trip {0} is not completed")]
    TripNotCompleted(TripId),
    #[error("a rating needs at least one factor")]
    EmptyRating,
    #[error("unknown rating {0}")]
    UnknownRating(RatingId),
    #[error("unknown dispute {0}")]
    UnknownDispute(DisputeId),
    #[error("factor {0:?} cannot be verified from telemetry")]
    NotVerifiableFactor(Factor),
    #[error("rating {rating} has no {factor:?} score")]
    FactorNotRated { rating: RatingId, factor: Factor },
    #[error("rating {0} already has a dispute")]
    DisputeExists(RatingId),
    #[error("dispute {0} is already resolved")]
    DisputeClosed(DisputeId),
    #[error("no arrival telemetry for trip {0}")]
    MissingTelemetry(TripId),
    #[error("alert config requires window >= min_count >= 1")]
    InvalidConfig,
}

/// All ratings, disputes and trip telemetry for every driver.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RatingBook {
    trips: BTreeMap<TripId, CompletedTrip>,
    ratings: BTreeMap<RatingId, RatingRecord>,
    by_trip: BTreeMap<TripId, RatingId>,
    disputes: BTreeMap<DisputeId, Dispute>,
}

impl RatingBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_trip(&mut self, trip: CompletedTrip) {
        self.trips.insert(trip.trip, trip);
    }

    pub fn trip(&self, id: TripId) -> Option<&CompletedTrip> {
        self.trips.get(&id)
    }

    pub fn rating(&self, id: RatingId) -> Option<&RatingRecord> {
        self.ratings.get(&id)
    }

    pub fn dispute(&self, id: DisputeId) -> Option<&Dispute> {
        self.disputes.get(&id)
    }

    pub fn ratings_for<'a>(&'a self, driver: &'a DriverId) -> impl Iterator<Item = &'a RatingRecord> + 'a {
        self.ratings.values().filter(move |r| &r.driver == driver)
    }

    pub fn disputes_for<'a>(&'a self, driver: &'a DriverId) -> impl Iterator<Item = &'a Dispute> + 'a {
        self.disputes.values().filter(move |d| self.ratings.get(&d.rating).is_some_and(|r| &r.driver == driver))
    }

    pub fn next_rating_id(&self) -> RatingId {
        RatingId(self.ratings.keys().next_back().map_or(1, |k| k.0 + 1))
    }

    pub fn next_dispute_id(&self) -> DisputeId {
        DisputeId(self.disputes.keys().next_back().map_or(1, |k| k.0 + 1))
    }

    /// Builds the record for a rider's submission without storing it.
    pub fn prepare_rating(
        &self,
        trip: TripId,
        submission: &RatingSubmission,
        clock: Timestamp,
    ) -> Result<RatingRecord, RatingError> {
        let completed = self.trips.get(&trip).ok_or(RatingError::TripNotCompleted(trip))?;
        if self.by_trip.contains_key(&trip) {
            return Err(RatingError::DuplicateRating(trip));
        }
        if submission.labels.is_empty() {
            return Err(RatingError::EmptyRating);
        }
        let scores = submission
            .labels
            .iter()
            .map(|(f, label)| likert_value(label).map(|v| (*f, v)))
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        let feedback = submission
            .text
            .as_ref()
            .filter(|t| !t.trim().is_empty())
            .map(|text| Feedback { prompt_id: submission.prompt_id.clone(), text: text.clone() });
        Ok(RatingRecord {
            id: self.next_rating_id(),
            trip,
            driver: completed.driver.clone(),
            scores,
            feedback,
            created_at: clock,
            status: RatingStatus::Active,
        })
    }

    pub fn insert_rating(&mut self, record: RatingRecord) {
        self.by_trip.insert(record.trip, record.id);
        self.ratings.insert(record.id, record);
    }

    pub fn submit_rating(
        &mut self,
        trip: TripId,
        submission: &RatingSubmission,
        clock: Timestamp,
    ) -> Result<&RatingRecord, RatingError> {
        let record = self.prepare_rating(trip, submission, clock)?;
        let id = record.id;
        self.insert_rating(record);
        Ok(&self.ratings[&id])
    }

    pub fn prepare_dispute(&self, rating: RatingId, factor: Factor, clock: Timestamp) -> Result<Dispute, RatingError> {
        let record = self.ratings.get(&rating).ok_or(RatingError::UnknownRating(rating))?;
        if !factor.is_verifiable() {
            return Err(RatingError::NotVerifiableFactor(factor));
        }
        if !record.scores.contains_key(&factor) {
            return Err(RatingError::FactorNotRated { rating, factor });
        }
        if self.disputes.values().any(|d| d.rating == rating) {
            return Err(RatingError::DisputeExists(rating));
        }
        Ok(Dispute {
            id: self.next_dispute_id(),
            rating,
            factor,
            evidence_ref: format!("trip/{}/arrival", record.trip),
            status: DisputeStatus::Filed,
            resolution_note: None,
            filed_at: clock,
        })
    }

    /// Stores a dispute in any state and keeps the rating status in step.
    pub fn insert_dispute(&mut self, dispute: Dispute) {
        if let Some(r) = self.ratings.get_mut(&dispute.rating) {
            r.status = match dispute.status {
                DisputeStatus::Filed => RatingStatus::Disputed,
                DisputeStatus::Upheld => RatingStatus::Excluded,
                DisputeStatus::Denied => RatingStatus::Active,
            };
        }
        self.disputes.insert(dispute.id, dispute);
    }

    pub fn file_dispute(&mut self, rating: RatingId, factor: Factor, clock: Timestamp) -> Result<&Dispute, RatingError> {
        let d = self.prepare_dispute(rating, factor, clock)?;
        let id = d.id;
        self.insert_dispute(d);
        Ok(&self.disputes[&id])
    }

    /// Decides a filed dispute against recorded arrival telemetry.
    pub fn judge_dispute(&self, id: DisputeId) -> Result<Dispute, RatingError> {
        let dispute = self.disputes.get(&id).ok_or(RatingError::UnknownDispute(id))?;
        if dispute.status != DisputeStatus::Filed {
            return Err(RatingError::DisputeClosed(id));
        }
        if !dispute.factor.is_verifiable() {
            return Err(RatingError::NotVerifiableFactor(dispute.factor));
        }
        let record = self.ratings.get(&dispute.rating).ok_or(RatingError::UnknownRating(dispute.rating))?;
        let tele = self.trips.get(&record.trip).map(|t| t.telemetry);
        let (promised, arrived) = match tele {
            Some(TripTelemetry { promised_pickup, arrived_at: Some(a) }) => (promised_pickup, a),
            _ => return Err(RatingError::MissingTelemetry(record.trip)),
        };
        let deadline = promised + Duration::minutes(PUNCTUALITY_GRACE_MINUTES);
        let upheld = arrived <= deadline;
        let late = arrived - promised;
        let note = if upheld {
            format!(
                "arrival {} was within {PUNCTUALITY_GRACE_MINUTES} min of promised pickup {}; rating excluded",
                arrived.format("%Y-%m-%d %H:%M:%S"),
                promised.format("%Y-%m-%d %H:%M:%S")
            )
        } else {
            format!(
                "arrival {} was {} s after promised pickup {}, beyond the {PUNCTUALITY_GRACE_MINUTES} min grace; rating stands",
                arrived.format("%Y-%m-%d %H:%M:%S"),
                late.num_seconds(),
                promised.format("%Y-%m-%d %H:%M:%S")
            )
        };
        let mut out = dispute.clone();
        out.status = if upheld { DisputeStatus::Upheld } else { DisputeStatus::Denied };
        out.resolution_note = Some(note);
        Ok(out)
    }

    pub fn resolve_dispute(&mut self, id: DisputeId) -> Result<&Dispute, RatingError> {
        let judged = self.judge_dispute(id)?;
        self.insert_dispute(judged);
        Ok(&self.disputes[&id])
    }

    /// The driver's last `cfg.window` counted ratings, newest first.
    fn window<'a>(&'a self, driver: &'a DriverId, window: usize) -> Vec<&'a RatingRecord> {
        let mut rs: Vec<&RatingRecord> = self.ratings_for(driver).filter(|r| r.counts()).collect();
        rs.sort_by(|a, b| b.created_at.cmp(&a.created_at).then(b.id.cmp(&a.id)));
        rs.truncate(window);
        rs
    }

    pub fn aggregates(&self, driver: &DriverId, cfg: &AlertConfig) -> Vec<FactorAggregate> {
        let recent = self.window(driver, cfg.window);
        Factor::ALL
            .iter()
            .map(|&factor| {
                let scores: Vec<u8> = recent.iter().filter_map(|r| r.scores.get(&factor).copied()).collect();
                let count = scores.len();
                let mean = (count > 0).then(|| scores.iter().map(|&s| f64::from(s)).sum::<f64>() / count as f64);
                let alert = count >= cfg.min_count && mean.is_some_and(|m| m < cfg.threshold);
                FactorAggregate { factor, window: cfg.window, mean, count, alert }
            })
            .collect()
    }

    pub fn check_low_score_alerts(&self, driver: &DriverId, cfg: &AlertConfig) -> Result<Vec<LowScoreAlert>, RatingError> {
        cfg.validate()?;
        Ok(self
            .aggregates(driver, cfg)
            .into_iter()
            .filter(|a| a.alert)
            .map(|a| LowScoreAlert { factor: a.factor, mean: a.mean.unwrap_or_default(), count: a.count })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::at;

    fn book_with_trips(n: u64, promised: Timestamp, arrived: Option<Timestamp>) -> RatingBook {
        let mut b = RatingBook::new();
        for i in 1..=n {
            b.record_trip(CompletedTrip {
                trip: TripId(i),
                driver: DriverId::new("d1"),
                telemetry: TripTelemetry { promised_pickup: promised, arrived_at: arrived },
            });
        }
        b
    }

    fn sub(pairs: &[(Factor, &str)]) -> RatingSubmission {
        RatingSubmission { labels: pairs.iter().map(|(f, l)| (*f, l.to_string())).collect(), ..Default::default() }
    }

    #[test]
    fn likert_labels() {
        for (i, l) in LIKERT_LABELS.iter().enumerate() {
            assert_eq!(likert_value(l).unwrap(), i as u8 + 1);
            assert_eq!(likert_label(i as u8 + 1), Some(*l));
        }
        assert!(matches!(likert_value("Satisfied"), Err(RatingError::UnknownLabel(_))));
        assert_eq!(likert_label(0), None);
    }

    #[test]
    fn submit_rules() {
        let t = at("2024-06-03T10:00:00Z");
        let mut b = book_with_trips(1, t, Some(t));
        let all: Vec<(Factor, &str)> = Factor::ALL.iter().map(|f| (*f, "Very satisfied")).collect();
        let mut s = sub(&all);
        s.text = Some("Great music".into());
        s.prompt_id = Some("most_memorable".into());
        let r = b.submit_rating(TripId(1), &s, t).unwrap().clone();
        assert!(r.scores.values().all(|&v| v == 5));
        assert_eq!(r.feedback.as_ref().unwrap().prompt_id.as_deref(), Some("most_memorable"));
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<RatingRecord>(&json).unwrap(), r);
        assert!(matches!(b.submit_rating(TripId(1), &s, t), Err(RatingError::DuplicateRating(_))));
        assert!(matches!(b.submit_rating(TripId(2), &s, t), Err(RatingError::TripNotCompleted(_))));
    }

    #[test]
    fn alerts_window() {
        let t = at("2024-06-03T10:00:00Z");
        let cfg = AlertConfig::default();
        let mut b = book_with_trips(14, t, Some(t));
        assert!(b.check_low_score_alerts(&DriverId::new("d1"), &cfg).unwrap().is_empty());
        for i in 1..=4 {
            b.submit_rating(TripId(i), &sub(&[(Factor::Punctuality, "Somewhat dissatisfied")]), t + Duration::minutes(i as i64))
                .unwrap();
        }
        assert!(b.check_low_score_alerts(&DriverId::new("d1"), &cfg).unwrap().is_empty());
        for i in 5..=14 {
            b.submit_rating(TripId(i), &sub(&[(Factor::Punctuality, "Somewhat dissatisfied")]), t + Duration::minutes(i as i64))
                .unwrap();
        }
        let alerts = b.check_low_score_alerts(&DriverId::new("d1"), &cfg).unwrap();
        assert_eq!(alerts, vec![LowScoreAlert { factor: Factor::Punctuality, mean: 2.0, count: 10 }]);
        assert!(b.check_low_score_alerts(&DriverId::new("d1"), &AlertConfig { window: 3, min_count: 5, threshold: 3.0 }).is_err());
    }

    #[test]
    fn punctuality_dispute_grace() {
        let promised = at("2024-06-03T10:00:00Z");
        for (arrived, upheld) in [("2024-06-03T10:02:00Z", true), ("2024-06-03T10:03:00Z", true), ("2024-06-03T10:09:00Z", false)] {
            let mut b = book_with_trips(1, promised, Some(at(arrived)));
            let rid = b.submit_rating(TripId(1), &sub(&[(Factor::Punctuality, "Very dissatisfied")]), promised).unwrap().id;
            let did = b.file_dispute(rid, Factor::Punctuality, promised).unwrap().id;
            assert_eq!(b.rating(rid).unwrap().status, RatingStatus::Disputed);
            let d = b.resolve_dispute(did).unwrap().clone();
            assert!(d.resolution_note.is_some());
            assert_eq!(d.status == DisputeStatus::Upheld, upheld, "{arrived}");
            let status = b.rating(rid).unwrap().status;
            assert_eq!(status, if upheld { RatingStatus::Excluded } else { RatingStatus::Active });
            assert!(matches!(b.resolve_dispute(did), Err(RatingError::DisputeClosed(_))));
        }
    }

    #[test]
    fn dispute_errors() {
        let t = at("2024-06-03T10:00:00Z");
        let mut b = book_with_trips(2, t, None);
        let rid = b
            .submit_rating(TripId(1), &sub(&[(Factor::Politeness, "Very dissatisfied"), (Factor::Punctuality, "Very dissatisfied")]), t)
            .unwrap()
            .id;
        assert!(matches!(b.file_dispute(rid, Factor::Politeness, t), Err(RatingError::NotVerifiableFactor(_))));
        let did = b.file_dispute(rid, Factor::Punctuality, t).unwrap().id;
        assert!(matches!(b.file_dispute(rid, Factor::Punctuality, t), Err(RatingError::DisputeExists(_))));
        assert!(matches!(b.resolve_dispute(did), Err(RatingError::MissingTelemetry(_))));
        let other = b.submit_rating(TripId(2), &sub(&[(Factor::Politeness, "Very dissatisfied")]), t).unwrap().id;
        assert!(matches!(b.file_dispute(other, Factor::Punctuality, t), Err(RatingError::FactorNotRated { .. })));
    }
}
