use serde::{Deserialize, Serialize};

use super::rng::{stream_rng, streams};
use super::runner::{driver_id, plain_profile, SimDriver, Simulation};
use super::stream::CITY_SIZE_KM;
use super::{brier_score, expected_calibration_error, resolved_offers, GroundTruthDriver, SimConfig, SimError};
use crate::context::driver_network;
use crate::geo::Point;
use crate::ids::DriverId;
use crate::platform::PlatformError;

/// Settings for the learning-calibration trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub seed: u64,
    pub drivers: usize,
    /// Observed offers per driver while learning.
    pub train_offers: u64,
    /// Resolved offers per driver scored after learning is frozen.
    pub eval_offers: u64,
    pub requests_per_hour: f64,
    pub metric_bins: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self { seed: 11, drivers: 10, train_offers: 2000, eval_offers: 4000, requests_per_hour: 150.0, metric_bins: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverCalibration {
    pub driver: DriverId,
    pub train_offers: u64,
    pub eval_offers: u64,
    pub learned_brier: f64,
    pub prior_brier: f64,
    pub learned_ece: f64,
    pub prior_ece: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub drivers: Vec<DriverCalibration>,
    pub learned_brier: f64,
    pub prior_brier: f64,
    pub learned_ece: f64,
    pub prior_ece: f64,
}

/// Trains every driver's network on `train_offers` observed offers, freezes
/// learning, then scores a held-out batch of offers twice: with the
/// probabilities actually shown (the learned network) and with the
/// untrained prior network on the same evidence and outcomes.
///
/// Drivers are realizable ground truths on a plain profile. Each driver is
/// taken off duty once it has its quota, so faster drivers do not crowd the
/// others out of either phase.
pub fn calibration_trial(cfg: &CalibrationConfig) -> Result<CalibrationReport, SimError> {
    let sim_cfg = SimConfig {
        seed: cfg.seed,
        drivers: cfg.drivers,
        requests_per_hour: cfg.requests_per_hour,
        duration_hours: 0.0,
        metric_bins: cfg.metric_bins,
        ..SimConfig::default()
    };
    let mut rng = stream_rng(cfg.seed, streams::DRIVERS);
    let drivers: Vec<SimDriver> = (0..cfg.drivers)
        .map(|i| {
            let id = driver_id(i);
            let location = Point::new(rand::Rng::random_range(&mut rng, 0.0..CITY_SIZE_KM), CITY_SIZE_KM / 2.0);
            SimDriver { profile: plain_profile(id.clone()), location, truth: GroundTruthDriver::realizable(id, &mut rng) }
        })
        .collect();
    let ids: Vec<DriverId> = drivers.iter().map(|d| d.profile.driver_id.clone()).collect();
    let priors = drivers
        .iter()
        .map(|d| driver_network(&d.profile))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| SimError::Platform(e.into()))?;
    let mut sim = Simulation::new(&sim_cfg, drivers)?;

    // Generous cap: a stalled run fails loudly instead of spinning.
    let max_steps = 10_000_000;
    run_phase(&mut sim, &ids, max_steps, |_, observed| observed >= cfg.train_offers)?;
    let trained: Vec<u64> = ids.iter().map(|id| sim.platform().state().driver(id).map_or(0, |r| r.observations)).collect();

    let mut frozen = sim.platform().settings().clone();
    frozen.learning_enabled = false;
    let now = sim.clock();
    sim.platform_mut().change_settings(frozen, now)?;
    let first_eval = sim.platform().state().offers().next_offer_id();
    let eval_start: Vec<u64> = trained.clone();
    for id in &ids {
        sim.platform_mut().update_status(id, now, |s| s.available = true)?;
    }
    run_phase(&mut sim, &ids, max_steps, |i, observed| observed - eval_start[i] >= cfg.eval_offers)?;

    let eval: Vec<_> = resolved_offers(&sim.records()).into_iter().filter(|o| o.offer >= first_eval).collect();
    let mut all_learned = Vec::new();
    let mut all_prior = Vec::new();
    let mut rows = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let mine: Vec<_> = eval.iter().filter(|o| &o.driver == id).collect();
        let learned: Vec<(f64, bool)> = mine.iter().map(|o| (o.probability, o.accepted())).collect();
        let prior = mine
            .iter()
            .map(|o| Ok((priors[i].infer_acceptance(&o.evidence)?, o.accepted())))
            .collect::<Result<Vec<_>, crate::bbn::BbnError>>()
            .map_err(|e| SimError::Platform(PlatformError::Network(e)))?;
        let nan = f64::NAN;
        rows.push(DriverCalibration {
            driver: id.clone(),
            train_offers: trained[i],
            eval_offers: mine.len() as u64,
            learned_brier: brier_score(&learned).unwrap_or(nan),
            prior_brier: brier_score(&prior).unwrap_or(nan),
            learned_ece: expected_calibration_error(&learned, cfg.metric_bins).unwrap_or(nan),
            prior_ece: expected_calibration_error(&prior, cfg.metric_bins).unwrap_or(nan),
        });
        all_learned.extend(learned);
        all_prior.extend(prior);
    }
    let nan = f64::NAN;
    Ok(CalibrationReport {
        drivers: rows,
        learned_brier: brier_score(&all_learned).unwrap_or(nan),
        prior_brier: brier_score(&all_prior).unwrap_or(nan),
        learned_ece: expected_calibration_error(&all_learned, cfg.metric_bins).unwrap_or(nan),
        prior_ece: expected_calibration_error(&all_prior, cfg.metric_bins).unwrap_or(nan),
    })
}

/// Steps until every driver satisfies `done(index, observations)`, taking
/// each driver off duty as soon as it does.
fn run_phase(
    sim: &mut Simulation,
    ids: &[DriverId],
    max_steps: usize,
    done: impl Fn(usize, u64) -> bool,
) -> Result<(), SimError> {
    let mut finished = vec![false; ids.len()];
    for _ in 0..max_steps {
        let now = sim.clock();
        for (i, id) in ids.iter().enumerate() {
            let observed = sim.platform().state().driver(id).map_or(0, |r| r.observations);
            if !finished[i] && done(i, observed) {
                finished[i] = true;
                sim.platform_mut().update_status(id, now, |s| s.available = false)?;
            }
        }
        if finished.iter().all(|f| *f) {
            return Ok(());
        }
        sim.step()?;
    }
    Err(SimError::InvalidConfig(format!("calibration phase did not finish within {max_steps} steps")))
}

