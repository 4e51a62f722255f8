//! Command-line harness around `dtr_core`: race a controller on a track,
//! compare DTR against follow-the-gap, benchmark per-cycle latency, dump
//! the centerline pipeline for one scan, and render everything to SVG.
//!
//! Exit status: 0 on success, 1 on configuration or input errors, 2 when
//! an episode ends in a collision, 3 when it times out or the controller
//! fails.

pub mod commands;
pub mod config;
pub mod output;
pub mod snapshot;
pub mod svg;
pub mod tracks;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dtr_core::sim::Pose;

use crate::commands::{cmd_bench, cmd_compare, cmd_race, cmd_render, cmd_snapshot, CliError, ControllerId, RunConfig};
use crate::tracks::resolve_track;

#[derive(Debug, Parser)]
#[command(name = "dtr", version, about = "Reactive racing controllers in a 2D LiDAR simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Track JSON file, or the name of a shipped track (corridor, oval, trap, gp).
    #[arg(long)]
    pub track: String,
    /// Output directory; each run writes into its own time-stamped subdirectory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// JSON config file applied before any --set.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config value by dotted key, e.g. control.k_la=0.8.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Laps to complete before the episode ends.
    #[arg(long)]
    pub laps: Option<usize>,
    /// Seed for the LiDAR noise generator.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        if self.laps == Some(0) {
            return Err(CliError::Input("--laps must be at least 1".into()));
        }
        RunConfig::resolve(&self.track, self.config.as_deref(), &self.set, self.laps, self.seed, &self.out)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one episode and write trajectory, lap, latency and summary CSVs.
    Race {
        #[command(flatten)]
        common: Common,
        /// Controller id: dtr or ftg.
        #[arg(long, default_value = "dtr")]
        controller: String,
    },
    /// Race dtr and ftg on the same track and write comparison.csv.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Render the track, optionally with a trajectory and a pipeline dump, to SVG.
    Render {
        #[arg(long)]
        track: String,
        /// trajectory.csv from a race.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// snapshot.json from the snapshot command.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Simulate one scan and dump every stage of centerline extraction as JSON.
    Snapshot {
        #[command(flatten)]
        common: Common,
        /// Vehicle pose as x,y,theta; defaults to the track's start pose.
        #[arg(long, value_parser = snapshot::parse_pose, allow_hyphen_values = true)]
        pose: Option<Pose>,
    },
    /// Time controller calls on simulated 1080-beam scans.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "dtr")]
        controller: String,
        #[arg(long, default_value_t = 1000)]
        cycles: usize,
    },
}

/// Runs a parsed command and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Race { common, controller } => {
            let id = ControllerId::parse(&controller)?;
            Ok(cmd_race(&common.resolve()?, id)?.exit_code())
        }
        Command::Compare { common } => Ok(cmd_compare(&common.resolve()?)?.exit_code()),
        Command::Render { track, trajectory, dump, out } => {
            cmd_render(&resolve_track(&track)?, trajectory.as_deref(), dump.as_deref(), &out)?;
            Ok(0)
        }
        Command::Snapshot { common, pose } => {
            cmd_snapshot(&common.resolve()?, pose)?;
            Ok(0)
        }
        Command::Bench { common, controller, cycles } => {
            let id = ControllerId::parse(&controller)?;
            cmd_bench(&common.resolve()?, id, cycles)?;
            Ok(0)
        }
    }
}
