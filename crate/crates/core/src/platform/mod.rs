//! Event-sourced platform state. Commands validate input and produce events;
//! applying events is the only way state changes, so replaying the log
//! reproduces everything.

mod commands;
mod config;
mod events;
mod export;
mod log;
mod state;
mod views;

pub use commands::*;
pub use config::*;
pub use events::*;
pub use export::*;
pub use log::*;
pub use state::*;
pub use views::*;
