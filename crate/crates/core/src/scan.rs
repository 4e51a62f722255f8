//! LiDAR scans in the vehicle frame (x forward, y left): polar to Cartesian
//! conversion, boxed subsampling and wall segmentation.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point2, EPS_GEOM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScanError {
    #[error("angle_increment must be positive, got {0}")]
    NonPositiveIncrement(f64),
    #[error("a scan needs at least 2 beams, got {0}")]
    TooFewBeams(usize),
    #[error("range_max must be positive and finite, got {0}")]
    InvalidRangeMax(f64),
    #[error("beam {index} has range {range} outside (0, range_max]")]
    RangeOutOfBounds { index: usize, range: f64 },
}

/// Polar range measurements. Beams without a return carry `range_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LidarScan {
    pub angle_min: f64,
    pub angle_increment: f64,
    pub ranges: Vec<f64>,
    pub range_max: f64,
}

impl LidarScan {
    pub fn validate(&self) -> Result<(), ScanError> {
        if !(self.angle_increment > 0.0) {
            return Err(ScanError::NonPositiveIncrement(self.angle_increment));
        }
        if self.ranges.len() < 2 {
            return Err(ScanError::TooFewBeams(self.ranges.len()));
        }
        if !(self.range_max > 0.0 && self.range_max.is_finite()) {
            return Err(ScanError::InvalidRangeMax(self.range_max));
        }
        for (index, &range) in self.ranges.iter().enumerate() {
            if range.is_finite() && !(range > 0.0 && range <= self.range_max) {
                return Err(ScanError::RangeOutOfBounds { index, range });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Beams in the upper half are measured back from `angle_max`, so a scan
    /// whose field of view is symmetric has exactly antisymmetric angles.
    pub fn beam_angle(&self, index: usize) -> f64 {
        let last = self.ranges.len().saturating_sub(1);
        if 2 * index <= last {
            self.angle_min + index as f64 * self.angle_increment
        } else {
            self.angle_max() - (last - index) as f64 * self.angle_increment
        }
    }

    pub fn angle_max(&self) -> f64 {
        self.angle_min + self.ranges.len().saturating_sub(1) as f64 * self.angle_increment
    }

    /// `true` when the beam saw nothing within `range_max`.
    pub fn is_no_return(&self, index: usize) -> bool {
        let r = self.ranges[index];
        !r.is_finite() || r >= self.range_max - EPS_GEOM
    }

    /// Index of the beam closest in angle to `bearing`, or `None` when the
    /// bearing lies outside the field of view.
    pub fn beam_for_bearing(&self, bearing: f64) -> Option<usize> {
        let half = 0.5 * self.angle_increment;
        if bearing < self.angle_min - half || bearing > self.angle_max() + half {
            return None;
        }
        let last = self.ranges.len() - 1;
        let from_min = ((bearing - self.angle_min) / self.angle_increment).round().max(0.0) as usize;
        if 2 * from_min <= last {
            return Some(from_min);
        }
        let from_max = ((self.angle_max() - bearing) / self.angle_increment).round().max(0.0) as usize;
        Some(last - from_max.min(last))
    }

    /// The same scene reflected about the vehicle's x-axis.
    pub fn mirrored(&self) -> LidarScan {
        let mut ranges = self.ranges.clone();
        ranges.reverse();
        LidarScan {
            angle_min: -self.angle_max(),
            angle_increment: self.angle_increment,
            ranges,
            range_max: self.range_max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub position: Point2,
    pub beam_index: usize,
    pub segment_id: Option<usize>,
}

/// One point per returning beam, in beam order; no-return beams are dropped.
pub fn scan_to_points(scan: &LidarScan) -> Vec<ScanPoint> {
    (0..scan.ranges.len())
        .filter(|&i| !scan.is_no_return(i) && scan.ranges[i] > 0.0)
        .map(|i| ScanPoint {
            position: Point2::from_polar(scan.ranges[i], scan.beam_angle(i)),
            beam_index: i,
            segment_id: None,
        })
        .collect()
}

/// Keeps at most one point per axis-aligned grid cell of side `cell`.
///
/// The survivor of each cell is the point nearest the sensor (lower beam
/// index on ties). The output keeps beam order. The choice depends only on
/// geometry, so mirroring a scan mirrors the subsample.
pub fn subsample_boxed(points: &[ScanPoint], cell: f64) -> Vec<ScanPoint> {
    assert!(cell > 0.0, "cell size must be positive");
    let mut best: HashMap<(i64, i64), usize> = HashMap::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let key = ((p.position.x / cell).floor() as i64, (p.position.y / cell).floor() as i64);
        best.entry(key)
            .and_modify(|j| {
                let (ri, rj) = (p.position.norm_squared(), points[*j].position.norm_squared());
                if ri < rj || (ri == rj && p.beam_index < points[*j].beam_index) {
                    *j = i;
                }
            })
            .or_insert(i);
    }
    let mut keep: Vec<usize> = best.into_values().collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| points[i]).collect()
}

/// Assigns wall segment ids: a new segment starts wherever consecutive
/// points are more than `gap_threshold` apart.
pub fn segment_walls(points: &[ScanPoint], gap_threshold: f64) -> Vec<ScanPoint> {
    let mut out = Vec::with_capacity(points.len());
    let mut id = 0;
    for (i, p) in points.iter().enumerate() {
        if i > 0 && p.position.distance(points[i - 1].position) > gap_threshold {
            id += 1;
        }
        out.push(ScanPoint { segment_id: Some(id), ..*p });
    }
    out
}
