use chrono::Duration;
use serde::{Deserialize, Serialize};

use super::{compute_incentive, DestinationCategory, DispatchError, DriverState, MatchConfig, RideInfo, RideRequest, ViolatedPreference};
use crate::bbn::{BayesNetwork, Evidence, FactorAttribution};
use crate::context::{discretize_context, nodes};
use crate::ids::{BundleId, DriverId, OfferId, RequestId};
use crate::money::Cents;
use crate::services::DriverProfile;
use crate::time::Timestamp;

/// Number of explaining factors attached to each offer.
pub const TOP_FACTORS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RideOffer {
    pub id: OfferId,
    pub request: RequestId,
    pub driver: DriverId,
    /// Acceptance probability shown to the driver, inferred from `evidence`.
    pub probability: f64,
    /// Probability before any incentive; the incentive is sized from this.
    pub base_probability: f64,
    pub evidence: Evidence,
    pub top_factors: Vec<FactorAttribution>,
    pub incentive: Cents,
    pub violated_preferences: Vec<ViolatedPreference>,
    pub issued_at: Timestamp,
    pub expires_at: Timestamp,
    pub requested_at: Timestamp,
    pub fare: Cents,
    pub destination: DestinationCategory,
    pub pickup_eta_minutes: f64,
    pub duration_minutes: f64,
    pub distance_km: f64,
    /// Whether accepting lines the trip up behind the current one.
    pub queued: bool,
    pub info: RideInfo,
}

/// Scores `request` for one driver and attaches incentive and explanation.
/// Equivalent to [`score_offer`] followed by [`explain_offer`].
///
/// The base probability is inferred with no incentive present. If that (or a
/// violated preference) earns an incentive, the evidence is updated to show
/// it and the displayed probability and factors are computed on the updated
/// evidence. Evidence is restricted to nodes the network knows.
#[allow(clippy::too_many_arguments)]
pub fn make_offer(
    id: OfferId,
    request: &RideRequest,
    profile: &DriverProfile,
    state: &DriverState,
    network: &BayesNetwork,
    cfg: &MatchConfig,
    violated: Vec<ViolatedPreference>,
    clock: Timestamp,
) -> Result<RideOffer, DispatchError> {
    let mut offer = score_offer(id, request, profile, state, network, cfg, violated, clock)?;
    explain_offer(&mut offer, network)?;
    Ok(offer)
}

/// [`make_offer`] without the explanation; `top_factors` is left empty.
#[allow(clippy::too_many_arguments)]
pub fn score_offer(
    id: OfferId,
    request: &RideRequest,
    profile: &DriverProfile,
    state: &DriverState,
    network: &BayesNetwork,
    cfg: &MatchConfig,
    violated: Vec<ViolatedPreference>,
    clock: Timestamp,
) -> Result<RideOffer, DispatchError> {
    request.validate()?;
    let full = discretize_context(request, profile, state, clock);
    let mut evidence: Evidence = full.iter().filter(|(n, _)| network.has_node(n)).collect();
    let base_probability = network.infer_acceptance(&evidence)?;
    let incentive = compute_incentive(base_probability, request.fare, !violated.is_empty(), cfg);
    if incentive.is_positive() && network.has_state(nodes::INCENTIVE, "yes") {
        evidence.set(nodes::INCENTIVE, "yes");
    }
    let probability = network.infer_acceptance(&evidence)?;
    Ok(RideOffer {
        id,
        request: request.id,
        driver: profile.driver_id.clone(),
        probability,
        base_probability,
        evidence,
        top_factors: Vec::new(),
        incentive,
        violated_preferences: violated,
        issued_at: clock,
        expires_at: clock + Duration::seconds(cfg.offer_window_secs),
        requested_at: request.requested_at,
        fare: request.fare,
        destination: request.destination,
        pickup_eta_minutes: request.eta_for(&state.driver_id, state.location),
        duration_minutes: request.duration_minutes,
        distance_km: request.distance_km,
        queued: state.on_trip,
        info: request.info.clone(),
    })
}

/// Fills `top_factors` from the offer's own evidence.
pub fn explain_offer(offer: &mut RideOffer, network: &BayesNetwork) -> Result<(), DispatchError> {
    offer.top_factors =
        if offer.evidence.is_empty() { Vec::new() } else { network.top_factors(&offer.evidence, TOP_FACTORS)? };
    Ok(())
}

/// Up to `bundle_size` offers for one driver sharing one expiry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferBundle {
    pub id: BundleId,
    pub driver: DriverId,
    pub offers: Vec<RideOffer>,
    pub expires_at: Timestamp,
}

/// Keeps the `cfg.bundle_size` most likely offers, ties to the earlier
/// request (then lower request id), and aligns their expiry to the earliest.
pub fn bundle_options(
    id: BundleId,
    driver: &DriverId,
    mut offers: Vec<RideOffer>,
    cfg: &MatchConfig,
) -> Result<OfferBundle, DispatchError> {
    if offers.is_empty() {
        return Err(DispatchError::EmptyBundle);
    }
    let mut requests: Vec<RequestId> = offers.iter().map(|o| o.request).collect();
    requests.sort();
    requests.dedup();
    if requests.len() != offers.len() {
        return Err(DispatchError::DuplicateRequest);
    }
    offers.sort_by(|a, b| {
        b.probability
            .total_cmp(&a.probability)
            .then(a.requested_at.cmp(&b.requested_at))
            .then(a.request.cmp(&b.request))
    });
    offers.truncate(cfg.bundle_size);
    let expires_at = offers.iter().map(|o| o.expires_at).min().expect("non-empty");
    for o in &mut offers {
        o.expires_at = expires_at;
    }
    Ok(OfferBundle { id, driver: driver.clone(), offers, expires_at })
}
