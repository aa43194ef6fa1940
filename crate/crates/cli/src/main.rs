//! `sphere-sim`: configuration-driven experiments, sweeps, beampatterns and
//! covariance caches.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 numerical
//! failure, 4 output write failure.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Output directory used when neither `--out` nor `run.output_dir` is set.
pub const OUT_ENV: &str = "SPHERE_SIM_OUT";

#[derive(Debug, Parser)]
#[command(name = "sphere-sim", version, about = "Robust near-field multi-user precoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured experiments at one moving distance.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Moving distance Δx in meters (mobility.move_distance_m).
        #[arg(long)]
        dx: Option<f64>,
    },
    /// Sweep the moving distance and pool results over several seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated moving distances in meters (mobility.sweep_m).
        #[arg(long)]
        dx: Option<String>,
        /// Seeds per sweep point (run.sweep_seeds).
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Beam gain of one user's precoder on a plane through that user.
    Beampattern {
        #[command(flatten)]
        common: Common,
        /// 1-based target user (beampattern.user).
        #[arg(long)]
        user: Option<usize>,
        /// sphere, zf, conj, eig or eqproj (beampattern.method).
        #[arg(long)]
        method: Option<String>,
        /// horizontal or vertical (beampattern.plane).
        #[arg(long)]
        plane: Option<String>,
        /// Grid points per in-plane axis (beampattern.steps); odd puts the
        /// user on a cell.
        #[arg(long)]
        steps: Option<usize>,
        /// Moving distance Δx in meters (mobility.move_distance_m).
        #[arg(long)]
        dx: Option<f64>,
    },
    /// Write one user's zone covariance to a binary cache file.
    Covariance {
        /// Scenario file (TOML).
        config: PathBuf,
        /// Master seed (master_seed).
        #[arg(long)]
        seed: Option<u64>,
        /// 1-based user.
        #[arg(long, default_value_t = 1)]
        user: usize,
        /// Moving distance Δx in meters (mobility.move_distance_m).
        #[arg(long)]
        dx: Option<f64>,
        /// Cache file to write.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML).
    config: PathBuf,
    /// Master seed (master_seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (run.output_dir, then $SPHERE_SIM_OUT, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (run.workers); results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("sphere-sim: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
