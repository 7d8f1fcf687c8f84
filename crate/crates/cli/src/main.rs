use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use coopride_cli::ops::{self, DATA_DIR_ENV};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "coopride", version, about = "Driver-centred ridesharing platform")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the driver and operator HTTP API.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = DATA_DIR_ENV, default_value = "data")]
        data_dir: PathBuf,
    },
    /// Run a seeded simulation; writes report.json and events.log.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        drivers: Option<usize>,
        #[arg(long)]
        hours: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay the six interview scenarios through the default network.
    ReplayScenarios {
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the data directory's event log as CSV.
    ExportLog {
        #[arg(long, env = DATA_DIR_ENV, default_value = "data")]
        data_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn metric(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"))
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt().with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into())).init();
    match Cli::parse().command {
        Command::Serve { config, data_dir } => ops::serve(ops::load_config(config.as_deref())?, &data_dir).await?,
        Command::Simulate { config, seed, drivers, hours, out } => {
            let cfg = ops::load_config(config.as_deref())?;
            let report = ops::simulate(&ops::sim_config(&cfg, seed, drivers, hours), &out)?;
            println!(
                "{} offers, acceptance {}, brier {}, ece {} -> {}",
                report.offers,
                metric(report.acceptance_rate),
                metric(report.brier),
                metric(report.ece),
                out.display()
            );
        }
        Command::ReplayScenarios { out } => {
            for p in ops::replay_scenarios(&out)? {
                println!("{}", p.display());
            }
        }
        Command::ExportLog { data_dir, out } => {
            let n = ops::export_log(&data_dir, &out)?;
            println!("{n} events -> {}", out.display());
        }
    }
    Ok(())
}
