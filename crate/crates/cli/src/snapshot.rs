//! Pipeline dumps: one simulated scan and every intermediate product of
//! centerline extraction.

use dtr_core::centerline::{trace_centerline, CenterlineConfig, PipelineTrace};
use dtr_core::geometry::Point2;
use dtr_core::scan::LidarScan;
use dtr_core::sim::{simulate_lidar, LidarSpec, Pose, TrackDefinition, VehicleState};
use serde::{Deserialize, Serialize};

/// Geometry in `scan` and `trace` is in the vehicle frame at `pose`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDump {
    pub track: String,
    pub pose: Pose,
    pub config: CenterlineConfig,
    pub scan: LidarScan,
    pub trace: PipelineTrace,
}

impl SnapshotDump {
    pub fn capture(track: &TrackDefinition, pose: Pose, config: &CenterlineConfig, lidar: &LidarSpec) -> Self {
        let scan = simulate_lidar(&VehicleState::at(pose), track, lidar);
        let trace = trace_centerline(&scan, config);
        Self { track: track.name.clone(), pose, config: *config, scan, trace }
    }

    pub fn to_world(&self, p: Point2) -> Point2 {
        let q = p.rotate(self.pose.theta);
        Point2::new(q.x + self.pose.x, q.y + self.pose.y)
    }

    /// Centerline samples in the world frame.
    pub fn centerline_world(&self) -> Vec<Point2> {
        self.trace.path.iter().flat_map(|p| &p.points).map(|&p| self.to_world(p)).collect()
    }

    pub fn samples_in_trap(&self, track: &TrackDefinition) -> usize {
        self.centerline_world().into_iter().filter(|&p| track.in_trap(p)).count()
    }
}

/// Parses `x,y,theta`.
pub fn parse_pose(text: &str) -> Result<Pose, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [x, y, theta] = parts.as_slice() else {
        return Err(format!("pose `{text}` must be x,y,theta"));
    };
    let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("pose component `{s}` is not a finite number"));
    Ok(Pose { x: num(x)?, y: num(y)?, theta: num(theta)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pose_parsing() {
        assert_eq!(parse_pose("1, -2.5,0.3"), Ok(Pose { x: 1.0, y: -2.5, theta: 0.3 }));
        assert!(parse_pose("1,2").is_err());
        assert!(parse_pose("1,2,3,4").is_err());
        assert!(parse_pose("1,x,3").is_err());
        assert!(parse_pose("1,inf,3").is_err());
    }

    #[test]
    fn world_transform_rotates_then_translates() {
        let dump = SnapshotDump {
            track: String::new(),
            pose: Pose { x: 1.0, y: 2.0, theta: std::f64::consts::FRAC_PI_2 },
            config: CenterlineConfig::default(),
            scan: LidarScan { angle_min: 0.0, angle_increment: 0.1, ranges: vec![], range_max: 10.0 },
            trace: PipelineTrace::default(),
        };
        let p = dump.to_world(Point2::new(1.0, 0.0));
        assert!((p.x - 1.0).abs() < 1e-12 && (p.y - 3.0).abs() < 1e-12);
    }
}
