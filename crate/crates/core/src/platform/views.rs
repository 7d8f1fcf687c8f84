use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::{PlatformState, TripCompletion, TripStatus};
use crate::bbn::{Evidence, FactorAttribution};
use crate::dispatch::{OfferState, RideOffer, ViolatedPreference};
use crate::earnings::{goal_progress, hours_bonus, BonusPeriod, GoalPeriod, GoalProgress};
use crate::ids::{DriverId, OfferId};
use crate::money::Cents;
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarningsView {
    pub trips: Vec<TripCompletion>,
    pub goal: GoalProgress,
    pub bonus_period: BonusPeriod,
    pub hours_in_bonus_period: f64,
    pub bonus_to_date: Cents,
}

pub fn earnings_view(state: &PlatformState, driver: &DriverId, clock: Timestamp) -> Option<EarningsView> {
    let rec = state.driver(driver)?;
    let settings = state.settings()?;
    let trips: Vec<TripCompletion> = state
        .trips()
        .filter(|t| &t.driver == driver && t.status == TripStatus::Completed)
        .filter_map(|t| t.completion.clone())
        .collect();
    let now = rec.state_at(clock);
    let earned = match rec.profile.earning_goal.period {
        GoalPeriod::Daily => now.earnings_today,
        GoalPeriod::Weekly => now.earnings_week,
    };
    let goal = goal_progress(&rec.profile.earning_goal, earned, clock);
    let in_period = |t: &TripRecordRef| match settings.bonus.period {
        BonusPeriod::Monthly => t.year == clock.year() && t.month == clock.month(),
        BonusPeriod::Yearly => t.year == clock.year(),
    };
    let hours: f64 = state
        .trips()
        .filter(|t| &t.driver == driver)
        .filter_map(|t| {
            let c = t.completion.as_ref()?;
            let at = t.promised_pickup;
            in_period(&TripRecordRef { year: at.year(), month: at.month() }).then_some(c.hours)
        })
        .sum();
    let bonus = hours_bonus(hours, settings.bonus.rate_per_hour).unwrap_or(Cents::ZERO);
    Some(EarningsView { trips, goal, bonus_period: settings.bonus.period, hours_in_bonus_period: hours, bonus_to_date: bonus })
}

struct TripRecordRef {
    year: i32,
    month: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptRowView {
    pub parents: Vec<(String, String)>,
    pub counts: Vec<f64>,
    pub p_accept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferExplanation {
    pub offer: OfferId,
    pub state: OfferState,
    pub probability: f64,
    pub base_probability: f64,
    pub evidence: Evidence,
    pub top_factors: Vec<FactorAttribution>,
    pub incentive: Cents,
    pub violated_preferences: Vec<ViolatedPreference>,
}

impl OfferExplanation {
    fn of(offer: &RideOffer, state: OfferState) -> Self {
        Self {
            offer: offer.id,
            state,
            probability: offer.probability,
            base_probability: offer.base_probability,
            evidence: offer.evidence.clone(),
            top_factors: offer.top_factors.clone(),
            incentive: offer.incentive,
            violated_preferences: offer.violated_preferences.clone(),
        }
    }
}

/// What the driver's acceptance model currently believes and why the last
/// offer looked the way it did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkView {
    pub query: String,
    pub observations: u64,
    pub rows: Vec<CptRowView>,
    pub last_offer: Option<OfferExplanation>,
}

pub fn network_view(state: &PlatformState, driver: &DriverId) -> Option<NetworkView> {
    let rec = state.driver(driver)?;
    let net = &rec.network;
    let query = net.query_name().to_owned();
    let cpt = net.cpt(&query)?;
    let rows = (0..cpt.rows())
        .map(|row| CptRowView {
            parents: net
                .row_labels(&query, row)
                .unwrap_or_default()
                .into_iter()
                .map(|(n, s)| (n.to_owned(), s.to_owned()))
                .collect(),
            counts: cpt.row(row).to_vec(),
            p_accept: cpt.probability(row, 0),
        })
        .collect();
    let last_offer = state
        .offers()
        .last_offer(driver)
        .map(|o| OfferExplanation::of(o, state.offers().state(o.id).unwrap_or(OfferState::Pending)));
    Some(NetworkView { query, observations: rec.observations, rows, last_offer })
}
