//! HTTP service and operator commands for the coopride platform.

pub mod api;
pub mod clock;
pub mod error;
pub mod ops;

pub use api::{router, AppState};
pub use clock::{Clock, ManualClock, SystemClock};
pub use error::ApiError;
