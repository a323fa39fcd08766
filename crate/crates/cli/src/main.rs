//! `fhnn`: simulate fleets, train and evaluate forecasters, export latent
//! states and run the trend experiments. Every command reads a flat
//! `key = value` config; `FHNN_<KEY>` environment variables and the global
//! flags override it, in that order.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fhnn_core::Error;

#[derive(Parser)]
#[command(name = "fhnn", version, about = "Hierarchical multi-scale streamflow forecasting experiments")]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for fleet generation and training (overrides `seed`).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads; 1 gives the canonical single-threaded schedule.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Output directory (overrides `out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Generate a synthetic fleet: one CSV per basin, a manifest and fleet.csv.
    Simulate,
    /// Train ensembles in the configured mode and score them on the test period.
    Train,
    /// Train on the simulated response of every basin.
    Pretrain,
    /// Continue a pretraining run (`checkpoint`) on observed responses.
    Finetune,
    /// Score a trained run (`checkpoint`) on the validation and test periods.
    Evaluate,
    /// Export per-scale latent state trajectories of a trained FHNN run.
    States,
    /// Run the desk-scale trend experiments on a synthetic fleet.
    Trends,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_config() => 2,
        Some(e) if e.is_data() => 3,
        Some(Error::Divergence { .. }) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = commands::resolve(cli.command, cli.config.as_deref(), cli.seed, cli.out.clone()).and_then(|cfg| {
        if let Some(n) = cli.threads {
            rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
        }
        commands::run(cli.command, &cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
