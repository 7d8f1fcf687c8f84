//! Driver-facing services: profile settings with change locks, complaint
//! tickets with visible status and expected completion, and a community forum
//! with location subforums and polls.

mod complaints;
mod forum;
mod profile;

pub use complaints::*;
pub use forum::*;
pub use profile::*;

#[cfg(test)]
pub(crate) use profile::fixtures;
