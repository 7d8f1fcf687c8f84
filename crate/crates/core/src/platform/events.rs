use serde::{Deserialize, Serialize};

use super::Settings;
use crate::bbn::{BayesNetwork, CptCell, Observation};
use crate::dispatch::{DriverState, OfferBundle, OfferOutcome, RideRequest};
use crate::earnings::TripCostBreakdown;
use crate::ids::{DriverId, OfferId, RequestId, TripId};
use crate::ratings::{Dispute, RatingRecord, TripTelemetry};
use crate::services::{ComplaintTicket, ConfigProposal, DriverProfile, ForumAction, ForumEntity, ProfileChanges, ProfileUpdate};
use crate::time::Timestamp;

/// Version written into every record.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripCompletion {
    pub trip: TripId,
    pub driver: DriverId,
    pub telemetry: TripTelemetry,
    pub hours: f64,
    pub tip: crate::money::Cents,
    pub breakdown: TripCostBreakdown,
}

/// Every state change on the platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Event {
    ConfigChange(Box<Settings>),
    DriverRegistered { profile: Box<DriverProfile>, state: DriverState, network: Box<BayesNetwork> },
    ProfileUpdated { driver: DriverId, changes: Box<ProfileChanges>, update: Box<ProfileUpdate> },
    DriverStatus(DriverState),
    RequestReceived(Box<RideRequest>),
    RequestDropped { request: RequestId },
    OfferIssued(Box<OfferBundle>),
    OfferResolved(Box<OfferOutcome>),
    /// The learning step for one resolved offer.
    Observation { driver: DriverId, offer: OfferId, observation: Box<Observation>, cell: Option<CptCell> },
    TripCompleted(Box<TripCompletion>),
    Rating(Box<RatingRecord>),
    Dispute(Box<Dispute>),
    Ticket(Box<ComplaintTicket>),
    Forum { actor: DriverId, action: Box<ForumAction>, entity: Box<ForumEntity>, proposal: Option<ConfigProposal> },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::ConfigChange(_) => "config_change",
            Event::DriverRegistered { .. } => "driver_registered",
            Event::ProfileUpdated { .. } => "profile_updated",
            Event::DriverStatus(_) => "driver_status",
            Event::RequestReceived(_) => "request_received",
            Event::RequestDropped { .. } => "request_dropped",
            Event::OfferIssued(_) => "offer_issued",
            Event::OfferResolved(_) => "offer_resolved",
            Event::Observation { .. } => "observation",
            Event::TripCompleted(_) => "trip_completed",
            Event::Rating(_) => "rating",
            Event::Dispute(_) => "dispute",
            Event::Ticket(_) => "ticket",
            Event::Forum { .. } => "forum",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub v: u32,
    pub seq: u64,
    pub at: Timestamp,
    #[serde(flatten)]
    pub event: Event,
}
