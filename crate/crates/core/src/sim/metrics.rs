use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ScenarioTranscript;
use crate::bbn::Evidence;
use crate::dispatch::{OfferState, RideOffer};
use crate::earnings::{EarningGoal, GoalPeriod};
use crate::ids::{DriverId, OfferId};
use crate::money::Cents;
use crate::platform::{Event, EventRecord};
use crate::time::{start_of_day, start_of_week, Timestamp};

/// Mean squared gap between forecast and outcome; `None` without data.
pub fn brier_score(pairs: &[(f64, bool)]) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    let sum: f64 = pairs.iter().map(|&(p, y)| (p - f64::from(u8::from(y))).powi(2)).sum();
    Some(sum / pairs.len() as f64)
}

/// Equal-width binned calibration error: the count-weighted mean, over bins,
/// of |mean forecast - observed rate|. A forecast of exactly 1 falls in the
/// top bin.
pub fn expected_calibration_error(pairs: &[(f64, bool)], bins: usize) -> Option<f64> {
    if pairs.is_empty() || bins == 0 {
        return None;
    }
    let mut sums = vec![(0usize, 0.0f64, 0usize); bins];
    for &(p, y) in pairs {
        let b = ((p * bins as f64) as usize).min(bins - 1);
        sums[b].0 += 1;
        sums[b].1 += p;
        sums[b].2 += usize::from(y);
    }
    let n = pairs.len() as f64;
    Some(
        sums.iter()
            .filter(|(c, _, _)| *c > 0)
            .map(|&(c, p, y)| (c as f64 / n) * (p / c as f64 - y as f64 / c as f64).abs())
            .sum(),
    )
}

/// An offer that reached a decision or expired. Voided offers are left out:
/// the driver never judged them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedOffer {
    pub offer: OfferId,
    pub driver: DriverId,
    pub probability: f64,
    pub evidence: Evidence,
    pub incentive: Cents,
    pub state: OfferState,
    pub issued_at: Timestamp,
    pub resolved_seq: u64,
}

impl ResolvedOffer {
    pub fn accepted(&self) -> bool {
        self.state == OfferState::Accepted
    }
}

/// Resolved offers in resolution order.
pub fn resolved_offers(records: &[EventRecord]) -> Vec<ResolvedOffer> {
    let mut issued: BTreeMap<OfferId, RideOffer> = BTreeMap::new();
    let mut out = Vec::new();
    for r in records {
        match &r.event {
            Event::OfferIssued(b) => issued.extend(b.offers.iter().map(|o| (o.id, o.clone()))),
            Event::OfferResolved(o) if !matches!(o.state, OfferState::Voided | OfferState::Pending) => {
                if let Some(offer) = issued.remove(&o.offer) {
                    out.push(ResolvedOffer {
                        offer: offer.id,
                        driver: offer.driver,
                        probability: offer.probability,
                        evidence: offer.evidence,
                        incentive: offer.incentive,
                        state: o.state,
                        issued_at: offer.issued_at,
                        resolved_seq: r.seq,
                    });
                }
            }
            _ => {}
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverReport {
    pub driver: DriverId,
    pub offers: u64,
    pub accepted: u64,
    pub expired: u64,
    pub acceptance_rate: Option<f64>,
    pub brier: Option<f64>,
    pub ece: Option<f64>,
    pub trips_completed: u64,
    pub net_earnings: Cents,
    pub goal: EarningGoal,
    /// Goal periods the run touched, counting partial ones.
    pub goal_periods: u64,
    /// Net earnings over the goal summed across `goal_periods`.
    pub goal_attainment: Option<f64>,
    pub incentive_spend: Cents,
}

/// Everything here except the transcripts follows from the event log alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub events: u64,
    pub metric_bins: usize,
    pub offers: u64,
    pub accepted: u64,
    pub acceptance_rate: Option<f64>,
    pub brier: Option<f64>,
    pub ece: Option<f64>,
    pub incentive_spend: Cents,
    pub net_earnings: Cents,
    pub drivers: Vec<DriverReport>,
    #[serde(default)]
    pub transcripts: Vec<ScenarioTranscript>,
}

fn rate(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn period_count(period: GoalPeriod, from: Timestamp, to: Timestamp) -> u64 {
    let (a, b, len) = match period {
        GoalPeriod::Daily => (start_of_day(from), start_of_day(to), chrono::Duration::days(1)),
        GoalPeriod::Weekly => (start_of_week(from), start_of_week(to), chrono::Duration::weeks(1)),
    };
    ((b - a).num_seconds() / len.num_seconds()) as u64 + 1
}

impl SimReport {
    pub fn from_events(records: &[EventRecord], metric_bins: usize) -> SimReport {
        let resolved = resolved_offers(records);
        let mut goals: BTreeMap<DriverId, EarningGoal> = BTreeMap::new();
        let mut net: BTreeMap<DriverId, (u64, Cents)> = BTreeMap::new();
        for r in records {
            match &r.event {
                Event::DriverRegistered { profile, .. } => {
                    goals.insert(profile.driver_id.clone(), profile.earning_goal);
                }
                Event::ProfileUpdated { driver, update, .. } => {
                    goals.insert(driver.clone(), update.profile.earning_goal);
                }
                Event::TripCompleted(c) => {
                    let e = net.entry(c.driver.clone()).or_default();
                    e.0 += 1;
                    e.1 += c.breakdown.net;
                }
                _ => {}
            }
        }
        let span = records.first().zip(records.last()).map(|(a, b)| (a.at, b.at));
        let pairs_of = |offers: &[&ResolvedOffer]| offers.iter().map(|o| (o.probability, o.accepted())).collect::<Vec<_>>();
        let drivers: Vec<DriverReport> = goals
            .iter()
            .map(|(id, goal)| {
                let mine: Vec<&ResolvedOffer> = resolved.iter().filter(|o| &o.driver == id).collect();
                let pairs = pairs_of(&mine);
                let accepted = mine.iter().filter(|o| o.accepted()).count() as u64;
                let (trips_completed, net_earnings) = net.get(id).copied().unwrap_or_default();
                let goal_periods = span.map_or(0, |(a, b)| period_count(goal.period, a, b));
                let target = goal.amount.0 as f64 * goal_periods as f64;
                DriverReport {
                    driver: id.clone(),
                    offers: mine.len() as u64,
                    accepted,
                    expired: mine.iter().filter(|o| o.state == OfferState::Expired).count() as u64,
                    acceptance_rate: rate(accepted, mine.len() as u64),
                    brier: brier_score(&pairs),
                    ece: expected_calibration_error(&pairs, metric_bins),
                    trips_completed,
                    net_earnings,
                    goal: *goal,
                    goal_periods,
                    goal_attainment: (target > 0.0).then(|| net_earnings.0 as f64 / target),
                    incentive_spend: mine.iter().filter(|o| o.accepted()).map(|o| o.incentive).sum(),
                }
            })
            .collect();
        let all: Vec<&ResolvedOffer> = resolved.iter().collect();
        let pairs = pairs_of(&all);
        let accepted = resolved.iter().filter(|o| o.accepted()).count() as u64;
        let known: BTreeSet<&DriverId> = goals.keys().collect();
        debug_assert!(resolved.iter().all(|o| known.contains(&o.driver)));
        SimReport {
            events: records.len() as u64,
            metric_bins,
            offers: resolved.len() as u64,
            accepted,
            acceptance_rate: rate(accepted, resolved.len() as u64),
            brier: brier_score(&pairs),
            ece: expected_calibration_error(&pairs, metric_bins),
            incentive_spend: drivers.iter().map(|d| d.incentive_spend).sum(),
            net_earnings: drivers.iter().map(|d| d.net_earnings).sum(),
            drivers,
            transcripts: Vec::new(),
        }
    }

    /// Pretty JSON; floats round-trip exactly.
    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
