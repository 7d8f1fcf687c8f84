//! Shared fixtures for the criterion benchmarks.

use coopride_core::platform::EventRecord;
use coopride_core::sim::{interview_scenarios, roster, Scenario, SimConfig, Simulation};

/// The six interview scenarios, used as realistic offer inputs.
pub fn scenarios() -> Vec<Scenario> {
    interview_scenarios()
}

/// The first `n` events of a seeded simulation.
pub fn simulated_log(n: usize) -> Vec<EventRecord> {
    let cfg = SimConfig { seed: 9, duration_hours: 24.0 * 14.0, ..SimConfig::default() };
    let mut sim = Simulation::new(&cfg, roster(&cfg)).expect("valid simulation config");
    sim.run_while(usize::MAX, |s| s.event_count() < n).expect("simulation runs");
    sim.records().into_iter().take(n).collect()
}
