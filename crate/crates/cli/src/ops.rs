//! The operator commands behind the CLI, kept here so tests can call them.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use coopride_core::platform::{export_log_csv, read_log, write_log, Platform, PlatformConfig, Snapshot, LOG_FILE, SNAPSHOT_FILE};
use coopride_core::sim::{replay_interview_scenarios, run_simulation, SimConfig, SimReport};

use crate::api::{router, AppState};
use crate::clock::{Clock, SystemClock};

/// Environment variable that overrides the data directory.
pub const DATA_DIR_ENV: &str = "COOPRIDE_DATA_DIR";

pub const REPORT_FILE: &str = "report.json";

/// Loads `path`, or the built-in defaults when no path is given.
pub fn load_config(path: Option<&Path>) -> Result<PlatformConfig> {
    match path {
        Some(p) => PlatformConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(PlatformConfig::default()),
    }
}

/// Simulation settings from the config file's defaults plus overrides.
pub fn sim_config(cfg: &PlatformConfig, seed: u64, drivers: Option<usize>, hours: Option<f64>) -> SimConfig {
    SimConfig {
        seed,
        drivers: drivers.unwrap_or(cfg.simulation.drivers),
        requests_per_hour: cfg.simulation.requests_per_hour,
        duration_hours: hours.unwrap_or(cfg.simulation.duration_hours),
        matching: cfg.matching,
        metric_bins: cfg.simulation.metric_bins,
        learning_enabled: cfg.learning_enabled,
        ..SimConfig::default()
    }
}

/// Runs a simulation and writes the report and the event log into `out`.
pub fn simulate(sim: &SimConfig, out: &Path) -> Result<SimReport> {
    let run = run_simulation(sim)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_log(&out.join(LOG_FILE), &run.events)?;
    fs::write(out.join(REPORT_FILE), run.report.to_text())?;
    Ok(run.report)
}

/// Writes one JSON transcript per interview scenario and returns the paths.
pub fn replay_scenarios(out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    replay_interview_scenarios()?
        .into_iter()
        .map(|t| {
            let path = out.join(format!("scenario_{}.json", t.number));
            fs::write(&path, serde_json::to_string_pretty(&t)?)?;
            Ok(path)
        })
        .collect()
}

/// Writes the data directory's event log as CSV. Returns the row count.
pub fn export_log(data_dir: &Path, out: &Path) -> Result<usize> {
    let records = read_log(&data_dir.join(LOG_FILE))?;
    fs::write(out, export_log_csv(&records)?).with_context(|| format!("writing {}", out.display()))?;
    Ok(records.len())
}

/// Serves the API until ctrl-c, then writes a snapshot.
pub async fn serve(cfg: PlatformConfig, data_dir: &Path) -> Result<()> {
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let platform = Platform::open_dir(data_dir, cfg.settings(), clock.now())?;
    tracing::info!(events = platform.state().last_seq(), dir = %data_dir.display(), "recovered platform state");
    let state = Arc::new(AppState::new(platform, clock, cfg.operator_token.clone(), rand_seed()));

    let ticker = state.clone();
    let period = crate::api::dispatch_interval().to_std().expect("positive interval");
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(period);
        loop {
            interval.tick().await;
            match ticker.dispatch_once() {
                Ok(b) if !b.is_empty() => tracing::info!(bundles = b.len(), "dispatched"),
                Ok(_) => {}
                Err(e) => tracing::warn!(error = %e.message, "dispatch round failed"),
            }
        }
    });

    let listener = tokio::net::TcpListener::bind(&cfg.listen).await.with_context(|| format!("binding {}", cfg.listen))?;
    tracing::info!(addr = %cfg.listen, "listening");
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Snapshot::of(state.platform().state()).save(&data_dir.join(SNAPSHOT_FILE))?;
    tracing::info!("snapshot written");
    Ok(())
}

fn rand_seed() -> u64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64)
}
