//! The `race`, `compare`, `render`, `snapshot` and `bench` commands.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dtr_core::control::DtrController;
use dtr_core::ftg::FtgController;
use dtr_core::geometry::Point2;
use dtr_core::sim::{run_episode, simulate_lidar, Controller, EpisodeResult, Pose, Termination, TrackDefinition};
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::output::{num, run_dir, write_csv, write_episode, Summary};
use crate::snapshot::SnapshotDump;
use crate::svg;
use crate::tracks::resolve_track;

/// Failures that exit with status 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("track: {0}")]
    Track(#[from] dtr_core::sim::TrackError),
    #[error("unknown controller `{0}`; valid ids: dtr, ftg")]
    UnknownController(String),
    #[error("{0}")]
    Input(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControllerId {
    Dtr,
    Ftg,
}

impl ControllerId {
    pub fn parse(id: &str) -> Result<Self, CliError> {
        match id {
            "dtr" => Ok(Self::Dtr),
            "ftg" => Ok(Self::Ftg),
            _ => Err(CliError::UnknownController(id.to_string())),
        }
    }

    pub fn build(self, config: &Config) -> Box<dyn Controller + Send> {
        match self {
            Self::Dtr => Box::new(DtrController::new(config.dtr())),
            Self::Ftg => Box::new(FtgController::new(config.ftg.clone())),
        }
    }
}

impl fmt::Display for ControllerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dtr => "dtr",
            Self::Ftg => "ftg",
        })
    }
}

/// How a run ended, mapped onto the process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Collision,
    /// Timeout or controller failure.
    Incomplete,
}

impl Outcome {
    pub fn of(r: &EpisodeResult) -> Self {
        match r.termination {
            Termination::LapsCompleted => Self::Success,
            Termination::Collision => Self::Collision,
            Termination::Timeout | Termination::ControllerError(_) => Self::Incomplete,
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Self::Success => 0,
            Self::Collision => 2,
            Self::Incomplete => 3,
        }
    }

    fn worst(self, other: Self) -> Self {
        if self.exit_code() >= other.exit_code() {
            self
        } else {
            other
        }
    }
}

/// Everything a simulation command needs, resolved and validated.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub track: TrackDefinition,
    pub config: Config,
    pub out: PathBuf,
}

impl RunConfig {
    /// Layers the config file, `--set` overrides, then `--laps` and `--seed`.
    pub fn resolve(
        track: &str,
        config_file: Option<&Path>,
        overrides: &[String],
        laps: Option<usize>,
        seed: Option<u64>,
        out: &Path,
    ) -> Result<Self, CliError> {
        let base = match config_file {
            Some(path) => Config::from_file(path)?,
            None => Config::default(),
        };
        let mut config = base.with_overrides(overrides)?;
        if let Some(laps) = laps {
            config.sim.lap_target = laps;
        }
        if let Some(seed) = seed {
            config.sim.seed = seed;
        }
        config.validate()?;
        let track = resolve_track(track)?;
        Ok(Self { track, config, out: out.to_path_buf() })
    }

    fn episode(&self, id: ControllerId) -> EpisodeResult {
        let mut controller = id.build(&self.config);
        run_episode(controller.as_mut(), &self.track, &self.config.sim)
    }

    fn save_config(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(&self.config).expect("config serializes");
        fs::write(dir.join("config.json"), text + "\n")?;
        Ok(())
    }
}

fn describe(id: ControllerId, r: &EpisodeResult) -> String {
    let s = Summary::of(r);
    let ms = |x: Option<f64>| x.map_or("n/a".into(), |v| format!("{:.3} ms", 1e3 * v));
    let secs = |x: Option<f64>| x.map_or("n/a".into(), |v| format!("{v:.3} s"));
    format!(
        "{id}: {:?} after {:.2} s, {} laps, mean lap {}, std {}, latency {} (std {}), collisions {}, trap entries {}",
        r.termination,
        r.total_time,
        r.lap_times.len(),
        secs(s.mean_lap),
        secs(s.std_lap),
        ms(s.mean_latency),
        ms(s.std_latency),
        s.collisions,
        s.trap_entries
    )
}

pub fn cmd_race(run: &RunConfig, id: ControllerId) -> Result<Outcome, CliError> {
    let dir = run_dir(&run.out, &format!("race-{}-{id}", run.track.name))?;
    run.save_config(&dir)?;
    let result = run.episode(id);
    write_episode(&dir, &result)?;
    println!("{}", describe(id, &result));
    println!("output: {}", dir.display());
    Ok(Outcome::of(&result))
}

pub const COMPARISON_HEADER: [&str; 6] =
    ["controller", "mean_lap_s", "std_lap_s", "mean_latency_s", "collisions", "trap_entries"];

pub fn cmd_compare(run: &RunConfig) -> Result<Outcome, CliError> {
    let dir = run_dir(&run.out, &format!("compare-{}", run.track.name))?;
    run.save_config(&dir)?;
    let ids = [ControllerId::Dtr, ControllerId::Ftg];
    let results: Vec<EpisodeResult> = std::thread::scope(|s| {
        let handles: Vec<_> = ids.iter().map(|&id| s.spawn(move || run.episode(id))).collect();
        handles.into_iter().map(|h| h.join().expect("episode thread panicked")).collect()
    });
    let mut rows = Vec::new();
    let mut outcome = Outcome::Success;
    for (&id, r) in ids.iter().zip(&results) {
        let sub = dir.join(id.to_string());
        fs::create_dir(&sub)?;
        write_episode(&sub, r)?;
        let s = Summary::of(r);
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        rows.push(vec![
            id.to_string(),
            opt(s.mean_lap),
            opt(s.std_lap),
            opt(s.mean_latency),
            s.collisions.to_string(),
            s.trap_entries.to_string(),
        ]);
        println!("{}", describe(id, r));
        outcome = outcome.worst(Outcome::of(r));
    }
    write_csv(&dir.join("comparison.csv"), &COMPARISON_HEADER, rows)?;
    match (results[0].mean_lap(), results[1].mean_lap()) {
        (Some(d), Some(f)) => println!("lap-time ratio dtr/ftg: {:.4} ({:.1}% faster)", d / f, 100.0 * (1.0 - d / f)),
        _ => println!("lap-time ratio dtr/ftg: n/a"),
    }
    println!("output: {}", dir.display());
    Ok(outcome)
}

/// Reads the `x` and `y` columns of a trajectory.csv.
pub fn read_trajectory(path: &Path) -> Result<Vec<Point2>, CliError> {
    let bad = |reason: String| CliError::Input(format!("trajectory {}: {reason}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| bad(format!("missing column `{name}`")));
    let (xi, yi) = (column("x")?, column("y")?);
    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| {
            record
                .get(i)
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("row {}: bad number", line + 1)))
        };
        points.push(Point2::new(field(xi)?, field(yi)?));
    }
    Ok(points)
}

pub fn read_dump(path: &Path) -> Result<SnapshotDump, CliError> {
    let bad = |reason: String| CliError::Input(format!("pipeline dump {}: {reason}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| bad(e.to_string()))
}

pub fn cmd_render(track: &TrackDefinition, trajectory: Option<&Path>, dump: Option<&Path>, out: &Path) -> Result<PathBuf, CliError> {
    let trajectory = trajectory.map(read_trajectory).transpose()?;
    let dump = dump.map(read_dump).transpose()?;
    let dir = run_dir(out, &format!("render-{}", track.name))?;
    let file = dir.join("render.svg");
    fs::write(&file, svg::render(track, trajectory.as_deref(), dump.as_ref()))?;
    println!("output: {}", file.display());
    Ok(file)
}

pub fn cmd_snapshot(run: &RunConfig, pose: Option<Pose>) -> Result<PathBuf, CliError> {
    let pose = pose.unwrap_or(run.track.start_pose);
    if !run.track.is_drivable(Point2::new(pose.x, pose.y)) {
        return Err(CliError::Input(format!("pose ({}, {}) is outside the drivable region", pose.x, pose.y)));
    }
    let dump = SnapshotDump::capture(&run.track, pose, &run.config.centerline, &run.config.sim.lidar);
    let dir = run_dir(&run.out, &format!("snapshot-{}", run.track.name))?;
    let file = dir.join("snapshot.json");
    fs::write(&file, serde_json::to_string(&dump).expect("dump serializes") + "\n")?;
    let trace = &dump.trace;
    println!(
        "{} points, {} triangles ({} retained), {} chain points, {} centerline samples, {} inside trap regions",
        trace.points.len(),
        trace.triangulation.len(),
        trace.verdicts.iter().filter(|v| v.retained).count(),
        trace.chain.len(),
        trace.path.as_ref().map_or(0, |p| p.len()),
        dump.samples_in_trap(&run.track)
    );
    println!("output: {}", file.display());
    Ok(file)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub const MIN_BENCH_CYCLES: usize = 100;

/// Latency statistics in seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchStats {
    pub median: f64,
    pub p95: f64,
    pub p99: f64,
}

/// Records scans along one simulated lap of `id`, then replays them
/// through a fresh controller `cycles` times, timing each call.
pub fn cmd_bench(run: &RunConfig, id: ControllerId, cycles: usize) -> Result<BenchStats, CliError> {
    if cycles < MIN_BENCH_CYCLES {
        return Err(CliError::Input(format!("bench needs at least {MIN_BENCH_CYCLES} cycles, got {cycles}")));
    }
    let mut lap = run.clone();
    lap.config.sim.lap_target = 1;
    let drive = lap.episode(id);
    let scans: Vec<_> =
        drive.trajectory.iter().take(cycles).map(|s| simulate_lidar(&s.state, &run.track, &run.config.sim.lidar)).collect();
    let mut controller = id.build(&run.config);
    let mut latencies = Vec::with_capacity(cycles);
    for scan in scans.iter().cycle().take(cycles) {
        let start = Instant::now();
        let cmd = controller.command(scan);
        latencies.push(start.elapsed().as_secs_f64());
        std::hint::black_box(cmd).map_err(CliError::Input)?;
    }
    let dir = run_dir(&run.out, &format!("bench-{}-{id}", run.track.name))?;
    write_csv(&dir.join("bench.csv"), &["cycle", "latency_s"], latencies.iter().enumerate().map(|(i, &t)| [i.to_string(), num(t)]))?;
    let mut sorted = latencies;
    sorted.sort_by(f64::total_cmp);
    let stats = BenchStats { median: quantile(&sorted, 0.5), p95: quantile(&sorted, 0.95), p99: quantile(&sorted, 0.99) };
    write_csv(
        &dir.join("bench_summary.csv"),
        &["cycles", "scans", "median_s", "p95_s", "p99_s"],
        [[cycles.to_string(), scans.len().to_string(), num(stats.median), num(stats.p95), num(stats.p99)]],
    )?;
    println!("{id} over {cycles} cycles on {} distinct {}-beam scans", scans.len(), run.config.sim.lidar.beams);
    println!(
        "median {:.3} ms, p95 {:.3} ms, p99 {:.3} ms",
        1e3 * stats.median,
        1e3 * stats.p95,
        1e3 * stats.p99
    );
    println!("output: {}", dir.display());
    Ok(stats)
}
