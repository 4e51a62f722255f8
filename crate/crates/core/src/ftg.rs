//! Follow-the-gap baseline: steer toward the furthest beam of the widest
//! open run of the scan.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::ControlCommand;
use crate::geometry::{point_segment_distance, Point2};
use crate::scan::LidarScan;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum FtgError {
    #[error("no beam exceeds the gap threshold")]
    NoGap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FtgParams {
    pub bubble_radius: f64,
    pub gap_range_threshold: f64,
    /// `[|steer| bound, speed]` rows, strictly increasing in bound.
    pub steer_speed_table: Vec<[f64; 2]>,
    pub max_steer: f64,
    /// Speed used when no gap is found.
    pub v_min: f64,
}

impl Default for FtgParams {
    fn default() -> Self {
        Self {
            bubble_radius: 0.3,
            gap_range_threshold: 1.5,
            steer_speed_table: vec![[0.1, 4.0], [0.2, 2.5], [0.4, 1.5]],
            max_steer: 0.4,
            v_min: 1.0,
        }
    }
}

impl FtgParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.bubble_radius >= 0.0 && self.bubble_radius.is_finite()) {
            return Err(format!("ftg.bubble_radius must be non-negative, got {}", self.bubble_radius));
        }
        if !(self.gap_range_threshold > 0.0 && self.gap_range_threshold.is_finite()) {
            return Err(format!("ftg.gap_range_threshold must be positive, got {}", self.gap_range_threshold));
        }
        if !(self.max_steer > 0.0 && self.max_steer < std::f64::consts::FRAC_PI_2) {
            return Err(format!("ftg.max_steer must lie in (0, pi/2), got {}", self.max_steer));
        }
        if !(self.v_min > 0.0 && self.v_min.is_finite()) {
            return Err(format!("ftg.v_min must be positive, got {}", self.v_min));
        }
        let table = &self.steer_speed_table;
        if table.is_empty() {
            return Err("ftg.steer_speed_table must not be empty".into());
        }
        for w in table.windows(2) {
            if !(w[1][0] > w[0][0]) {
                return Err("ftg.steer_speed_table bounds must be strictly increasing".into());
            }
            if w[1][1] > w[0][1] {
                return Err("ftg.steer_speed_table speeds must be non-increasing".into());
            }
        }
        if table.iter().any(|row| !(row[1] > 0.0 && row[1].is_finite())) {
            return Err("ftg.steer_speed_table speeds must be positive".into());
        }
        Ok(())
    }

    /// Speed of the first row whose bound exceeds `|steer|`, else the last row.
    pub fn speed_for(&self, steer: f64) -> f64 {
        let s = steer.abs();
        self.steer_speed_table
            .iter()
            .find(|row| row[0] > s)
            .or(self.steer_speed_table.last())
            .map_or(self.v_min, |row| row[1])
    }
}

fn effective_ranges(scan: &LidarScan) -> Vec<f64> {
    (0..scan.len())
        .map(|i| if scan.is_no_return(i) { scan.range_max } else { scan.ranges[i] })
        .collect()
}

/// Zeroes every beam that points toward the closest measured point and
/// passes within `radius` of it, measuring the distance to the beam segment
/// from the sensor to its hit point. All beams sharing the minimal range act
/// as centers.
pub fn apply_bubble(scan: &LidarScan, radius: f64) -> Vec<f64> {
    let mut ranges = effective_ranges(scan);
    let measured = || (0..ranges.len()).filter(|&i| !scan.is_no_return(i));
    let Some(closest) = measured().map(|i| ranges[i]).min_by(f64::total_cmp) else {
        return ranges;
    };
    let hit = |i: usize, r: f64| Point2::from_polar(r, scan.beam_angle(i));
    let centers: Vec<Point2> = measured().filter(|&i| ranges[i] == closest).map(|i| hit(i, closest)).collect();
    let zeroed: Vec<usize> = (0..ranges.len())
        .filter(|&i| {
            let end = hit(i, ranges[i]);
            centers.iter().any(|&c| end.dot(c) > 0.0 && point_segment_distance(c, Point2::ORIGIN, end) <= radius)
        })
        .collect();
    for i in zeroed {
        ranges[i] = 0.0;
    }
    ranges
}

/// Longest maximal run of beams with range above `threshold`, as inclusive
/// `(start, end)` indices.
///
/// Equal-length runs are ranked by how close their center is to the middle
/// beam, then by their peak range, then by the lower start index.
pub fn find_largest_gap(ranges: &[f64], threshold: f64) -> Result<(usize, usize), FtgError> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &r) in ranges.iter().enumerate() {
        match (r > threshold, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, ranges.len() - 1));
    }
    // Twice the center offset keeps everything in integers.
    let offset = |(s, e): (usize, usize)| (s + e).abs_diff(ranges.len().saturating_sub(1));
    let peak = |(s, e): (usize, usize)| ranges[s..=e].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    runs.into_iter()
        .min_by(|&a, &b| {
            (b.1 - b.0)
                .cmp(&(a.1 - a.0))
                .then(offset(a).cmp(&offset(b)))
                .then(peak(b).total_cmp(&peak(a)))
                .then(a.0.cmp(&b.0))
        })
        .ok_or(FtgError::NoGap)
}

/// Fractional beam index of the furthest beam in `start..=end`; ties resolve
/// to the median of the tied indices.
pub fn furthest_beam(ranges: &[f64], start: usize, end: usize) -> f64 {
    let best = ranges[start..=end].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (start..=end).filter(|&i| ranges[i] == best).collect();
    let n = tied.len();
    if n % 2 == 1 {
        tied[n / 2] as f64
    } else {
        0.5 * (tied[n / 2 - 1] + tied[n / 2]) as f64
    }
}

fn bearing_at(scan: &LidarScan, index: f64) -> f64 {
    let lo = index.floor() as usize;
    if index == lo as f64 {
        scan.beam_angle(lo)
    } else {
        0.5 * (scan.beam_angle(lo) + scan.beam_angle(lo + 1))
    }
}

/// One follow-the-gap cycle. Without a gap the car goes straight at `v_min`.
pub fn ftg_step(scan: &LidarScan, p: &FtgParams) -> ControlCommand {
    let ranges = apply_bubble(scan, p.bubble_radius);
    match find_largest_gap(&ranges, p.gap_range_threshold) {
        Ok((start, end)) => {
            let target = bearing_at(scan, furthest_beam(&ranges, start, end));
            let steer = target.clamp(-p.max_steer, p.max_steer);
            ControlCommand { steer, speed: p.speed_for(steer) }
        }
        Err(FtgError::NoGap) => ControlCommand { steer: 0.0, speed: p.v_min },
    }
}

#[derive(Clone, Debug, Default)]
pub struct FtgController {
    pub params: FtgParams,
}

impl FtgController {
    pub fn new(params: FtgParams) -> Self {
        Self { params }
    }

    pub fn step(&mut self, scan: &LidarScan) -> ControlCommand {
        ftg_step(scan, &self.params)
    }
}
