use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{DispatchError, OfferBundle, RideOffer};
use crate::bbn::{Observation, Outcome};
use crate::ids::{BundleId, DriverId, OfferId, TripId};
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Decline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OfferState {
    Pending,
    Accepted,
    Declined,
    Expired,
    /// Another offer of the same bundle was accepted.
    Voided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripAssignment {
    pub trip: TripId,
    pub queued: bool,
}

/// What happened to one offer. Voided offers carry no observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferOutcome {
    pub offer: OfferId,
    pub bundle: BundleId,
    pub driver: DriverId,
    pub state: OfferState,
    pub at: Timestamp,
    pub observation: Option<Observation>,
    pub trip: Option<TripAssignment>,
}

/// Issued bundles and the state of every offer in them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OfferBook {
    bundles: BTreeMap<BundleId, OfferBundle>,
    states: BTreeMap<OfferId, OfferState>,
    owner: BTreeMap<OfferId, BundleId>,
    /// Bundles with at least one pending offer.
    live: BTreeSet<BundleId>,
}

impl OfferBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_offer_id(&self) -> OfferId {
        OfferId(self.owner.keys().next_back().map_or(1, |k| k.0 + 1))
    }

    pub fn next_bundle_id(&self) -> BundleId {
        BundleId(self.bundles.keys().next_back().map_or(1, |k| k.0 + 1))
    }

    pub fn offer(&self, id: OfferId) -> Option<&RideOffer> {
        let bundle = self.bundles.get(self.owner.get(&id)?)?;
        bundle.offers.iter().find(|o| o.id == id)
    }

    pub fn state(&self, id: OfferId) -> Option<OfferState> {
        self.states.get(&id).copied()
    }

    pub fn bundle(&self, id: BundleId) -> Option<&OfferBundle> {
        self.bundles.get(&id)
    }

    pub fn bundles(&self) -> impl Iterator<Item = &OfferBundle> {
        self.bundles.values()
    }

    fn is_live(&self, bundle: &OfferBundle) -> bool {
        bundle.offers.iter().any(|o| self.states.get(&o.id) == Some(&OfferState::Pending))
    }

    fn live_bundles(&self) -> impl Iterator<Item = &OfferBundle> {
        self.live.iter().map(|id| &self.bundles[id])
    }

    /// The driver's bundle with at least one pending offer, if any.
    pub fn pending_bundle(&self, driver: &DriverId) -> Option<&OfferBundle> {
        self.live_bundles().find(|b| &b.driver == driver)
    }

    /// Pending offers of the driver's in-flight bundle.
    pub fn pending_offers(&self, driver: &DriverId) -> Vec<&RideOffer> {
        self.pending_bundle(driver)
            .map(|b| b.offers.iter().filter(|o| self.states.get(&o.id) == Some(&OfferState::Pending)).collect())
            .unwrap_or_default()
    }

    /// Most recent offer made to the driver, in any state.
    pub fn last_offer(&self, driver: &DriverId) -> Option<&RideOffer> {
        self.bundles.values().rev().find(|b| &b.driver == driver).and_then(|b| b.offers.first())
    }

    pub fn check_issue(&self, bundle: &OfferBundle) -> Result<(), DispatchError> {
        if self.pending_bundle(&bundle.driver).is_some() {
            return Err(DispatchError::BundleInFlight(bundle.driver.clone()));
        }
        if bundle.offers.is_empty() {
            return Err(DispatchError::EmptyBundle);
        }
        Ok(())
    }

    /// Stores a bundle with all offers pending. Callers check first.
    pub fn insert_bundle(&mut self, bundle: OfferBundle) {
        for o in &bundle.offers {
            self.states.insert(o.id, OfferState::Pending);
            self.owner.insert(o.id, bundle.id);
        }
        self.live.insert(bundle.id);
        self.bundles.insert(bundle.id, bundle);
    }

    pub fn issue(&mut self, bundle: OfferBundle) -> Result<(), DispatchError> {
        self.check_issue(&bundle)?;
        self.insert_bundle(bundle);
        Ok(())
    }

    fn expiry_outcome(bundle: &OfferBundle, offer: &RideOffer, clock: Timestamp) -> OfferOutcome {
        OfferOutcome {
            offer: offer.id,
            bundle: bundle.id,
            driver: bundle.driver.clone(),
            state: OfferState::Expired,
            at: clock,
            observation: Some(Observation { evidence: offer.evidence.clone(), outcome: Outcome::Decline, timestamp: clock }),
            trip: None,
        }
    }

    fn pending_in<'a>(&'a self, bundle: &'a OfferBundle) -> impl Iterator<Item = &'a RideOffer> + 'a {
        bundle.offers.iter().filter(|o| self.states.get(&o.id) == Some(&OfferState::Pending))
    }

    /// Outcomes a driver decision would produce, without applying them.
    ///
    /// Accepting voids the bundle's other pending offers. A decision at or
    /// after expiry is refused; the error carries the expiry outcomes for
    /// every pending offer in the bundle so the caller can record them.
    pub fn plan_decision(&self, offer: OfferId, decision: Decision, clock: Timestamp) -> Result<Vec<OfferOutcome>, DispatchError> {
        let bundle_id = *self.owner.get(&offer).ok_or(DispatchError::UnknownOffer(offer))?;
        let bundle = &self.bundles[&bundle_id];
        if self.states.get(&offer) != Some(&OfferState::Pending) {
            return Err(DispatchError::AlreadyResolved(offer));
        }
        if clock >= bundle.expires_at {
            let outcomes = self.pending_in(bundle).map(|o| Self::expiry_outcome(bundle, o, clock)).collect();
            return Err(DispatchError::DecisionAfterExpiry { offer, outcomes });
        }
        let chosen = bundle.offers.iter().find(|o| o.id == offer).expect("owner index consistent");
        let mut out = Vec::new();
        match decision {
            Decision::Accept => {
                out.push(OfferOutcome {
                    offer,
                    bundle: bundle_id,
                    driver: bundle.driver.clone(),
                    state: OfferState::Accepted,
                    at: clock,
                    observation: Some(Observation { evidence: chosen.evidence.clone(), outcome: Outcome::Accept, timestamp: clock }),
                    trip: Some(TripAssignment { trip: TripId(offer.0), queued: chosen.queued }),
                });
                for other in self.pending_in(bundle).filter(|o| o.id != offer) {
                    out.push(OfferOutcome {
                        offer: other.id,
                        bundle: bundle_id,
                        driver: bundle.driver.clone(),
                        state: OfferState::Voided,
                        at: clock,
                        observation: None,
                        trip: None,
                    });
                }
            }
            Decision::Decline => out.push(OfferOutcome {
                offer,
                bundle: bundle_id,
                driver: bundle.driver.clone(),
                state: OfferState::Declined,
                at: clock,
                observation: Some(Observation { evidence: chosen.evidence.clone(), outcome: Outcome::Decline, timestamp: clock }),
                trip: None,
            }),
        }
        Ok(out)
    }

    /// Expiry outcomes for every pending offer whose window has closed.
    pub fn plan_expiry(&self, clock: Timestamp) -> Vec<OfferOutcome> {
        self.live_bundles()
            .filter(|b| clock >= b.expires_at)
            .flat_map(|b| self.pending_in(b).map(move |o| Self::expiry_outcome(b, o, clock)))
            .collect()
    }

    pub fn apply_outcome(&mut self, outcome: &OfferOutcome) {
        self.states.insert(outcome.offer, outcome.state);
        if let Some(b) = self.owner.get(&outcome.offer).and_then(|id| self.bundles.get(id)) {
            if !self.is_live(b) {
                self.live.remove(&b.id);
            }
        }
    }

    /// Plans and applies a decision. On late decisions the expiry is applied
    /// before the error is returned.
    pub fn resolve(&mut self, offer: OfferId, decision: Decision, clock: Timestamp) -> Result<Vec<OfferOutcome>, DispatchError> {
        match self.plan_decision(offer, decision, clock) {
            Ok(outcomes) => {
                outcomes.iter().for_each(|o| self.apply_outcome(o));
                Ok(outcomes)
            }
            Err(DispatchError::DecisionAfterExpiry { offer, outcomes }) => {
                outcomes.iter().for_each(|o| self.apply_outcome(o));
                Err(DispatchError::DecisionAfterExpiry { offer, outcomes })
            }
            Err(e) => Err(e),
        }
    }

    pub fn expire(&mut self, clock: Timestamp) -> Vec<OfferOutcome> {
        let outcomes = self.plan_expiry(clock);
        outcomes.iter().for_each(|o| self.apply_outcome(o));
        outcomes
    }
}
