//! Run directories and CSV writing.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use dtr_core::sim::EpisodeResult;

/// Formats a float with ten significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.9e}")
}

/// Creates `<out>/<label>-<UTC timestamp>`, adding a counter if that
/// name is already taken.
pub fn run_dir(out: &Path, label: &str) -> io::Result<PathBuf> {
    fs::create_dir_all(out)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let base = format!("{label}-{stamp}");
    for k in 0.. {
        let name = if k == 0 { base.clone() } else { format!("{base}-{k}") };
        let dir = out.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()
}

/// Writes trajectory.csv, laps.csv, latency.csv and summary.csv.
pub fn write_episode(dir: &Path, r: &EpisodeResult) -> io::Result<()> {
    write_csv(
        &dir.join("trajectory.csv"),
        &["t", "x", "y", "theta", "v", "steer", "speed_cmd"],
        r.trajectory.iter().map(|s| {
            [s.t, s.state.x, s.state.y, s.state.theta, s.state.v, s.command.steer, s.command.speed].map(num)
        }),
    )?;
    write_csv(
        &dir.join("laps.csv"),
        &["lap", "lap_time_s"],
        r.lap_times.iter().enumerate().map(|(i, &t)| [(i + 1).to_string(), num(t)]),
    )?;
    write_csv(
        &dir.join("latency.csv"),
        &["cycle", "latency_s"],
        r.cycle_latencies.iter().enumerate().map(|(i, &t)| [i.to_string(), num(t)]),
    )?;
    let s = Summary::of(r);
    write_csv(&dir.join("summary.csv"), &Summary::HEADER, [s.row()])
}

/// Aggregate episode metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub mean_lap: Option<f64>,
    pub std_lap: Option<f64>,
    pub mean_latency: Option<f64>,
    pub std_latency: Option<f64>,
    pub collisions: usize,
    pub trap_entries: usize,
}

impl Summary {
    pub const HEADER: [&'static str; 6] =
        ["mean_lap_s", "std_lap_s", "mean_latency_s", "std_latency_s", "collisions", "trap_entries"];

    pub fn of(r: &EpisodeResult) -> Self {
        use dtr_core::sim::{mean, std_dev};
        Self {
            mean_lap: r.mean_lap(),
            std_lap: r.std_lap(),
            mean_latency: mean(&r.cycle_latencies),
            std_latency: std_dev(&r.cycle_latencies),
            collisions: r.collisions,
            trap_entries: r.trap_entries,
        }
    }

    /// Missing statistics are written as empty fields.
    pub fn row(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        vec![
            opt(self.mean_lap),
            opt(self.std_lap),
            opt(self.mean_latency),
            opt(self.std_latency),
            self.collisions.to_string(),
            self.trap_entries.to_string(),
        ]
    }
}
