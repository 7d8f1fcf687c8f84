//! Deterministic simulator: synthetic demand, drivers with hidden decision
//! models, a runner that drives the platform, metrics recomputed from the
//! event log, the learning-calibration trial and the interview scenarios.
//!
//! One seed feeds every random draw, split into independent streams by
//! fixed labels. The runner is single-threaded, so a seed fixes the whole
//! run, log included.

mod calibration;
mod config;
mod ground_truth;
mod metrics;
mod rng;
mod runner;
mod scenarios;
mod stream;

pub use calibration::*;
pub use config::*;
pub use ground_truth::*;
pub use metrics::*;
pub use rng::*;
pub use runner::*;
pub use scenarios::*;
pub use stream::*;
