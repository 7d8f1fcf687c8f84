//! Offer generation: constraint filtering, acceptance scoring, incentives,
//! bundles and the offer lifecycle.

mod book;
mod constraints;
mod incentive;
mod offer;
mod types;

pub use book::*;
pub use constraints::*;
pub use incentive::*;
pub use offer::*;
pub use types::*;
