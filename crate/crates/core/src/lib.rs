//! Driver-centred ridesharing backend.
//!
//! The crate is organised around the decision loop a driver sees:
//!
//! - [`bbn`]: a generic discrete Bayesian network with Dirichlet-count CPTs,
//!   exact inference, online learning and leave-one-out explanations.
//! - [`context`]: the default acceptance network and the mapping from a ride
//!   request plus driver state into network evidence.
//! - [`dispatch`]: preference filtering, offer scoring, incentives, bundles and
//!   the offer resolution state machine.
//! - [`earnings`]: total-cost-of-ownership breakdowns, hours bonus, goals.
//! - [`ratings`]: factor ratings, low-score alerts and telemetry disputes.
//! - [`services`]: driver profiles with settings locks, complaint tickets, forum.
//! - [`platform`]: event-sourced state, the append-only log, snapshots, config.
//! - [`sim`]: the seeded simulator, ground-truth drivers, calibration metrics
//!   and the interview scenario replay.

// Money literals are written as units_cents, e.g. `Cents(12_50)`.
#![allow(clippy::inconsistent_digit_grouping)]

pub mod bbn;
pub mod context;
pub mod dispatch;
pub mod earnings;
pub mod geo;
pub mod ids;
pub mod money;
pub mod platform;
pub mod ratings;
pub mod services;
pub mod sim;
pub mod time;

pub use bbn::{BayesNetwork, BbnError, Evidence, FactorAttribution, NetworkSpec, Observation, Outcome};
pub use dispatch::{DriverState, MatchConfig, OfferBundle, RideOffer, RideRequest};
pub use earnings::{CostProfile, TripCostBreakdown};
pub use geo::Point;
pub use ids::*;
pub use money::Cents;
pub use services::DriverProfile;
pub use time::Timestamp;
