//! Deterministic closed-loop world: kinematic bicycle plant, polyline
//! tracks, beam-cast LiDAR, collision checks, lap timing and episodes.

use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{ControlCommand, DtrController};
use crate::ftg::FtgController;
use crate::geometry::{closed_edges, point_in_polygon, point_segment_distance, ray_segment_intersect, Point2};
use crate::scan::LidarScan;

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("cannot read track file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed track file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid track field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> TrackError {
    TrackError::Invalid { field, reason: reason.into() }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinishLine {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

/// On-disk track layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackFile {
    pub name: String,
    pub outer: Vec<[f64; 2]>,
    pub inner: Vec<[f64; 2]>,
    #[serde(default)]
    pub obstacles: Vec<Vec<[f64; 2]>>,
    pub start_pose: Pose,
    pub finish_line: FinishLine,
    #[serde(default)]
    pub trap_regions: Vec<Vec<[f64; 2]>>,
}

/// A closed circuit. `inner` may be empty for open layouts such as a
/// straight corridor, where `outer` alone bounds the drivable area.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackDefinition {
    pub name: String,
    pub outer: Vec<Point2>,
    pub inner: Vec<Point2>,
    pub obstacles: Vec<Vec<Point2>>,
    pub start_pose: Pose,
    pub finish_line: (Point2, Point2),
    pub trap_regions: Vec<Vec<Point2>>,
}

fn to_points(v: &[[f64; 2]]) -> Vec<Point2> {
    v.iter().map(|&p| Point2::from(p)).collect()
}

fn from_points(v: &[Point2]) -> Vec<[f64; 2]> {
    v.iter().map(|p| [p.x, p.y]).collect()
}

fn segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let side = |p: Point2, q: Point2, r: Point2| (q - p).cross(r - p);
    let (d1, d2) = (side(a, b, c), side(a, b, d));
    let (d3, d4) = (side(c, d, a), side(c, d, b));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn check_polygon(field: &'static str, poly: &[Point2]) -> Result<(), TrackError> {
    if poly.len() < 3 {
        return Err(invalid(field, format!("needs at least 3 vertices, got {}", poly.len())));
    }
    if !poly.iter().all(|p| p.is_finite()) {
        return Err(invalid(field, "contains a non-finite coordinate"));
    }
    let edges: Vec<_> = closed_edges(poly).collect();
    let n = edges.len();
    for i in 0..n {
        if edges[i].0 == edges[i].1 {
            return Err(invalid(field, format!("repeated vertex at index {i}")));
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(edges[i].0, edges[i].1, edges[j].0, edges[j].1) {
                return Err(invalid(field, format!("edges {i} and {j} intersect")));
            }
        }
    }
    Ok(())
}

impl TrackDefinition {
    pub fn from_file(file: TrackFile) -> Result<Self, TrackError> {
        let fl = file.finish_line;
        let track = TrackDefinition {
            name: file.name,
            outer: to_points(&file.outer),
            inner: to_points(&file.inner),
            obstacles: file.obstacles.iter().map(|o| to_points(o)).collect(),
            start_pose: file.start_pose,
            finish_line: (fl.a.into(), fl.b.into()),
            trap_regions: file.trap_regions.iter().map(|o| to_points(o)).collect(),
        };
        track.validate()?;
        Ok(track)
    }

    pub fn to_file(&self) -> TrackFile {
        TrackFile {
            name: self.name.clone(),
            outer: from_points(&self.outer),
            inner: from_points(&self.inner),
            obstacles: self.obstacles.iter().map(|o| from_points(o)).collect(),
            start_pose: self.start_pose,
            finish_line: FinishLine {
                a: [self.finish_line.0.x, self.finish_line.0.y],
                b: [self.finish_line.1.x, self.finish_line.1.y],
            },
            trap_regions: self.trap_regions.iter().map(|o| from_points(o)).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, TrackError> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TrackError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| TrackError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), TrackError> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        check_polygon("outer", &self.outer)?;
        if !self.inner.is_empty() {
            check_polygon("inner", &self.inner)?;
            if let Some(p) = self.inner.iter().find(|&&p| !point_in_polygon(p, &self.outer)) {
                return Err(invalid("inner", format!("vertex ({}, {}) lies outside `outer`", p.x, p.y)));
            }
            for (a, b) in closed_edges(&self.inner) {
                if closed_edges(&self.outer).any(|(c, d)| segments_cross(a, b, c, d)) {
                    return Err(invalid("inner", "crosses `outer`"));
                }
            }
        }
        for o in &self.obstacles {
            check_polygon("obstacles", o)?;
        }
        for t in &self.trap_regions {
            check_polygon("trap_regions", t)?;
        }
        let s = self.start_pose;
        if ![s.x, s.y, s.theta].iter().all(|v| v.is_finite()) {
            return Err(invalid("start_pose", "contains a non-finite value"));
        }
        if !self.is_drivable(Point2::new(s.x, s.y)) {
            return Err(invalid("start_pose", "lies outside the drivable region"));
        }
        let (a, b) = self.finish_line;
        if !(a.is_finite() && b.is_finite()) || a.distance(b) <= 0.0 {
            return Err(invalid("finish_line", "must be a finite segment of positive length"));
        }
        if !self.is_drivable(a.lerp(b, 0.5)) {
            return Err(invalid("finish_line", "midpoint lies outside the drivable region"));
        }
        Ok(())
    }

    /// Inside `outer`, outside `inner` and outside every obstacle.
    pub fn is_drivable(&self, p: Point2) -> bool {
        point_in_polygon(p, &self.outer)
            && !point_in_polygon(p, &self.inner)
            && !self.obstacles.iter().any(|o| point_in_polygon(p, o))
    }

    pub fn in_trap(&self, p: Point2) -> bool {
        self.trap_regions.iter().any(|t| point_in_polygon(p, t))
    }

    /// Every physical boundary edge: outer, inner and obstacles.
    pub fn segments(&self) -> Vec<(Point2, Point2)> {
        let mut out: Vec<_> = closed_edges(&self.outer).collect();
        if !self.inner.is_empty() {
            out.extend(closed_edges(&self.inner));
        }
        for o in &self.obstacles {
            out.extend(closed_edges(o));
        }
        out
    }

    /// Axis-aligned bounds `(min, max)` of the outer boundary.
    pub fn bounds(&self) -> (Point2, Point2) {
        self.outer.iter().fold(
            (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
            |(lo, hi), p| (Point2::new(lo.x.min(p.x), lo.y.min(p.y)), Point2::new(hi.x.max(p.x), hi.y.max(p.y))),
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
}

impl VehicleState {
    pub fn at(pose: Pose) -> Self {
        Self { x: pose.x, y: pose.y, theta: pose.theta, v: 0.0 }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let t = theta.rem_euclid(TAU);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

/// Kinematic bicycle update; the commanded speed is applied directly.
pub fn kinematic_step(s: VehicleState, cmd: ControlCommand, dt: f64, wheelbase: f64) -> VehicleState {
    let v = cmd.speed;
    VehicleState {
        x: s.x + v * s.theta.cos() * dt,
        y: s.y + v * s.theta.sin() * dt,
        theta: wrap_angle(s.theta + v / wheelbase * cmd.steer.tan() * dt),
        v,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarSpec {
    pub beams: usize,
    /// Field of view (rad), centered on the heading.
    pub fov: f64,
    pub range_max: f64,
    /// Standard deviation of Gaussian range noise (m) on returning beams.
    pub noise_sigma: f64,
}

impl Default for LidarSpec {
    fn default() -> Self {
        Self { beams: 1080, fov: 270f64.to_radians(), range_max: 10.0, noise_sigma: 0.0 }
    }
}

impl LidarSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.beams < 2 {
            return Err(format!("sim.lidar.beams must be at least 2, got {}", self.beams));
        }
        if !(self.fov > 0.0 && self.fov <= TAU) {
            return Err(format!("sim.lidar.fov must lie in (0, 2pi], got {}", self.fov));
        }
        if !(self.range_max > 0.0 && self.range_max.is_finite()) {
            return Err(format!("sim.lidar.range_max must be positive, got {}", self.range_max));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(format!("sim.lidar.noise_sigma must be non-negative, got {}", self.noise_sigma));
        }
        Ok(())
    }

    /// Empty scan with this beam layout. The field of view is exactly
    /// symmetric about the heading.
    pub fn layout(&self) -> LidarScan {
        let increment = self.fov / (self.beams - 1) as f64;
        LidarScan {
            angle_min: -(0.5 * (self.beams - 1) as f64) * increment,
            angle_increment: increment,
            ranges: vec![self.range_max; self.beams],
            range_max: self.range_max,
        }
    }
}

fn cast(origin: Point2, heading: f64, scan: &mut LidarScan, segments: &[(Point2, Point2)]) {
    let near: Vec<_> = segments
        .iter()
        .filter(|(a, b)| point_segment_distance(origin, *a, *b) < scan.range_max)
        .collect();
    for i in 0..scan.ranges.len() {
        let dir = Point2::from_polar(1.0, heading + scan.beam_angle(i));
        scan.ranges[i] = near
            .iter()
            .filter_map(|(a, b)| ray_segment_intersect(origin, dir, *a, *b))
            .fold(scan.range_max, f64::min);
    }
}

/// Noise-free scan from pose `s`.
pub fn simulate_lidar(s: &VehicleState, track: &TrackDefinition, spec: &LidarSpec) -> LidarScan {
    let mut scan = spec.layout();
    cast(s.position(), s.theta, &mut scan, &track.segments());
    scan
}

/// Adds Gaussian range noise to returning beams, keeping ranges within
/// `(0, range_max)`.
pub fn add_range_noise(scan: &mut LidarScan, sigma: f64, rng: &mut ChaCha8Rng) {
    if sigma <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let ceiling = scan.range_max.next_down();
    for i in 0..scan.ranges.len() {
        if scan.is_no_return(i) {
            continue;
        }
        let r = scan.ranges[i] + normal.sample(rng);
        scan.ranges[i] = r.clamp(1e-3, ceiling);
    }
}

/// True iff the car's center is closer than `radius` to any boundary edge.
pub fn check_collision(s: &VehicleState, track: &TrackDefinition, radius: f64) -> bool {
    let p = s.position();
    track.segments().iter().any(|&(a, b)| point_segment_distance(p, a, b) < radius)
}

/// Fraction along `prev -> next` at which the step crosses the finish line
/// forward, if it does. Forward means passing from the right of `a -> b` to
/// its left, so `a` is on the driver's left.
pub fn finish_crossing(prev: &VehicleState, next: &VehicleState, finish: (Point2, Point2)) -> Option<f64> {
    let (a, b) = finish;
    let edge = b - a;
    let (p, q) = (prev.position(), next.position());
    let side_p = edge.cross(p - a);
    let side_q = edge.cross(q - a);
    if !(side_p < 0.0 && side_q >= 0.0) {
        return None;
    }
    let frac = side_p / (side_p - side_q);
    let hit = p.lerp(q, frac);
    let s = (hit - a).dot(edge) / edge.norm_squared();
    (0.0..=1.0).contains(&s).then_some(frac)
}

pub fn lap_crossing(prev: &VehicleState, next: &VehicleState, finish: (Point2, Point2)) -> bool {
    finish_crossing(prev, next, finish).is_some()
}

/// A per-cycle controller: scan in, command out.
pub trait Controller {
    fn command(&mut self, scan: &LidarScan) -> Result<ControlCommand, String>;
}

impl Controller for DtrController {
    fn command(&mut self, scan: &LidarScan) -> Result<ControlCommand, String> {
        Ok(self.step(scan))
    }
}

impl Controller for FtgController {
    fn command(&mut self, scan: &LidarScan) -> Result<ControlCommand, String> {
        Ok(self.step(scan))
    }
}

impl<F: FnMut(&LidarScan) -> ControlCommand> Controller for F {
    fn command(&mut self, scan: &LidarScan) -> Result<ControlCommand, String> {
        Ok(self(scan))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    pub dt: f64,
    pub max_time: f64,
    pub lap_target: usize,
    pub wheelbase: f64,
    pub collision_radius: f64,
    /// Seconds after a finish-line crossing during which crossings are ignored.
    pub rearm_delay: f64,
    pub seed: u64,
    pub lidar: LidarSpec,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            dt: 0.025,
            max_time: 180.0,
            lap_target: 5,
            wheelbase: 0.33,
            collision_radius: 0.15,
            rearm_delay: 1.0,
            seed: 0,
            lidar: LidarSpec::default(),
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(format!("sim.dt must be positive, got {}", self.dt));
        }
        if !(self.max_time > 0.0 && self.max_time.is_finite()) {
            return Err(format!("sim.max_time must be positive, got {}", self.max_time));
        }
        if self.lap_target == 0 {
            return Err("sim.lap_target must be at least 1".into());
        }
        if !(self.wheelbase > 0.0 && self.collision_radius >= 0.0 && self.rearm_delay >= 0.0) {
            return Err("sim.wheelbase must be positive; collision_radius and rearm_delay non-negative".into());
        }
        self.lidar.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: VehicleState,
    /// Command that produced `state`; zero for the initial sample.
    pub command: ControlCommand,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    LapsCompleted,
    Collision,
    Timeout,
    ControllerError(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub trajectory: Vec<TrajectorySample>,
    pub lap_times: Vec<f64>,
    pub collisions: usize,
    pub first_collision: Option<f64>,
    pub cycle_latencies: Vec<f64>,
    pub trap_entries: usize,
    /// Time of the first forward crossing, where lap timing begins.
    pub timing_start: Option<f64>,
    pub total_time: f64,
    pub termination: Termination,
}

impl EpisodeResult {
    pub fn mean_lap(&self) -> Option<f64> {
        mean(&self.lap_times)
    }

    pub fn std_lap(&self) -> Option<f64> {
        std_dev(&self.lap_times)
    }
}

pub fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Population standard deviation.
pub fn std_dev(v: &[f64]) -> Option<f64> {
    let m = mean(v)?;
    Some((v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt())
}

/// Runs one episode from the track's start pose.
///
/// Timing starts at the first forward finish-line crossing; each later
/// crossing closes a lap. The episode ends after `lap_target` laps, at the
/// first collision, at `max_time`, or when the controller fails.
pub fn run_episode(controller: &mut dyn Controller, track: &TrackDefinition, config: &EpisodeConfig) -> EpisodeResult {
    let segments = track.segments();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = VehicleState::at(track.start_pose);
    let mut trajectory = vec![TrajectorySample { t: 0.0, state, command: ControlCommand::default() }];
    let mut trap_entries = usize::from(track.in_trap(state.position()));
    let mut latencies = Vec::new();
    let mut lap_times = Vec::new();
    let mut last_crossing: Option<f64> = None;
    let mut timing_start = None;
    let mut first_collision = None;
    let mut step: u64 = 0;
    let termination = loop {
        let t = step as f64 * config.dt;
        if t >= config.max_time {
            break Termination::Timeout;
        }
        let mut scan = config.lidar.layout();
        cast(state.position(), state.theta, &mut scan, &segments);
        add_range_noise(&mut scan, config.lidar.noise_sigma, &mut rng);

        let started = Instant::now();
        let outcome = controller.command(&scan);
        latencies.push(started.elapsed().as_secs_f64());
        let cmd = match outcome {
            Ok(cmd) if cmd.steer.is_finite() && cmd.speed.is_finite() && cmd.speed >= 0.0 => cmd,
            Ok(cmd) => break Termination::ControllerError(format!("invalid command {cmd:?}")),
            Err(e) => break Termination::ControllerError(e),
        };

        let next = kinematic_step(state, cmd, config.dt, config.wheelbase);
        step += 1;
        let t_next = step as f64 * config.dt;
        trajectory.push(TrajectorySample { t: t_next, state: next, command: cmd });
        if track.in_trap(next.position()) {
            trap_entries += 1;
        }

        if let Some(frac) = finish_crossing(&state, &next, track.finish_line) {
            let crossed = t + frac * config.dt;
            if last_crossing.is_none_or(|last| crossed - last >= config.rearm_delay) {
                match last_crossing {
                    Some(last) => lap_times.push(crossed - last),
                    None => timing_start = Some(crossed),
                }
                last_crossing = Some(crossed);
            }
        }
        state = next;

        if segments.iter().any(|&(a, b)| point_segment_distance(state.position(), a, b) < config.collision_radius) {
            first_collision = Some(t_next);
            break Termination::Collision;
        }
        if lap_times.len() >= config.lap_target {
            break Termination::LapsCompleted;
        }
    };
    EpisodeResult {
        total_time: step as f64 * config.dt,
        trajectory,
        lap_times,
        collisions: usize::from(first_collision.is_some()),
        first_collision,
        cycle_latencies: latencies,
        trap_entries,
        timing_start,
        termination,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn corridor(length: f64) -> TrackDefinition {
        TrackDefinition {
            name: "corridor".into(),
            outer: vec![
                Point2::new(-1.0, -1.0),
                Point2::new(length, -1.0),
                Point2::new(length, 1.0),
                Point2::new(-1.0, 1.0),
            ],
            inner: vec![],
            obstacles: vec![],
            start_pose: Pose::default(),
            finish_line: (Point2::new(length / 2.0, 1.0), Point2::new(length / 2.0, -1.0)),
            trap_regions: vec![],
        }
    }

    #[test]
    fn straight_step() {
        let s = kinematic_step(VehicleState::default(), ControlCommand { steer: 0.0, speed: 1.0 }, 0.1, 0.33);
        assert_relative_eq!(s.x, 0.1);
        assert_eq!((s.y, s.theta), (0.0, 0.0));
        let still = VehicleState { x: 1.0, y: 2.0, theta: 0.5, v: 0.0 };
        let s = kinematic_step(still, ControlCommand { steer: 0.3, speed: 0.0 }, 0.1, 0.33);
        assert_eq!((s.x, s.y, s.theta), (1.0, 2.0, 0.5));
    }

    #[test]
    fn turning_radius_matches_closed_form() {
        let (wheelbase, steer) = (0.33, 0.3f64);
        let radius = wheelbase / steer.tan();
        let mut s = VehicleState::default();
        let mut pts = vec![];
        for _ in 0..4000 {
            s = kinematic_step(s, ControlCommand { steer, speed: 1.0 }, 0.001, wheelbase);
            pts.push(s.position());
        }
        // The circle is centered at (0, R).
        let center = Point2::new(0.0, radius);
        for p in pts {
            assert!((p.distance(center) - radius).abs() < 0.01 * radius);
        }
    }

    #[test]
    fn heading_wraps_into_half_open_interval() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0);
        assert_relative_eq!(wrap_angle(-7.0), -7.0 + TAU);
    }

    #[test]
    fn lidar_in_corridor() {
        let track = corridor(100.0);
        let spec = LidarSpec::default();
        let scan = simulate_lidar(&VehicleState::default(), &track, &spec);
        let left = scan.beam_for_bearing(PI / 2.0).unwrap();
        let right = scan.beam_for_bearing(-PI / 2.0).unwrap();
        assert_relative_eq!(scan.ranges[left], 1.0, epsilon = 1e-5);
        assert_relative_eq!(scan.ranges[right], 1.0, epsilon = 1e-5);
        assert_eq!(scan.ranges[539], 10.0);
        assert!(scan.is_no_return(540));
    }

    #[test]
    fn collision_is_strict() {
        let track = corridor(100.0);
        let at = |y| VehicleState { x: 5.0, y, theta: 0.0, v: 0.0 };
        assert!(!check_collision(&at(0.0), &track, 0.15));
        assert!(check_collision(&at(0.9), &track, 0.15));
        assert!(!check_collision(&at(0.75), &track, 0.25));
    }

    #[test]
    fn crossing_direction() {
        let line = (Point2::new(0.0, 1.0), Point2::new(0.0, -1.0));
        let at = |x| VehicleState { x, y: 0.0, theta: 0.0, v: 0.0 };
        assert!(lap_crossing(&at(-0.1), &at(0.1), line));
        assert_relative_eq!(finish_crossing(&at(-0.1), &at(0.3), line).unwrap(), 0.25);
        assert!(!lap_crossing(&at(0.1), &at(-0.1), line));
        assert!(!lap_crossing(&at(0.1), &at(0.3), line));
        let far = |x| VehicleState { x, y: 5.0, theta: 0.0, v: 0.0 };
        assert!(!lap_crossing(&far(-0.1), &far(0.1), line));
    }

    #[test]
    fn constant_controller_in_corridor() {
        let track = corridor(100.0);
        let mut ctl = |_: &LidarScan| ControlCommand { steer: 0.0, speed: 1.0 };
        let cfg = EpisodeConfig { max_time: 10.0, ..Default::default() };
        let res = run_episode(&mut ctl, &track, &cfg);
        assert_eq!(res.termination, Termination::Timeout);
        assert_eq!(res.collisions, 0);
        assert_eq!(res.trajectory.len(), 401);
        let end = res.trajectory.last().unwrap();
        assert_relative_eq!(end.state.x, 10.0, epsilon = 1e-9);
        assert_relative_eq!(end.t, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn track_file_rejects_unknown_fields() {
        let mut v = serde_json::to_value(corridor(10.0).to_file()).unwrap();
        v["surface"] = serde_json::json!("asphalt");
        let err = TrackDefinition::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("surface"), "{err}");
    }

    #[test]
    fn track_validation_names_the_field() {
        let mut t = corridor(10.0);
        t.start_pose.y = 5.0;
        let err = TrackDefinition::from_file(t.to_file()).unwrap_err();
        assert!(matches!(err, TrackError::Invalid { field: "start_pose", .. }));
        let mut t = corridor(10.0);
        t.outer.swap(1, 2);
        let err = TrackDefinition::from_file(t.to_file()).unwrap_err();
        assert!(matches!(err, TrackError::Invalid { field: "outer", .. }));
    }
}
