//! Steering and speed from an extracted centerline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centerline::{extract_centerline, CenterlineConfig, CenterlinePath};
use crate::geometry::Point2;
use crate::scan::LidarScan;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("path is empty")]
    EmptyPath,
    #[error("lookahead target coincides with the vehicle")]
    TargetAtOrigin,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub max_steer: f64,
    /// Friction coefficient.
    pub mu: f64,
    /// Conservative estimate of the maximum lateral acceleration (m/s^2).
    pub a_y_max: f64,
    pub a_accel: f64,
    pub a_decel: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 0.33,
            max_steer: 0.4,
            mu: 1.0,
            a_y_max: 10.0,
            a_accel: 4.0,
            a_decel: 8.0,
            v_min: 1.0,
            v_max: 8.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("wheelbase", self.wheelbase),
            ("max_steer", self.max_steer),
            ("mu", self.mu),
            ("a_y_max", self.a_y_max),
            ("a_accel", self.a_accel),
            ("a_decel", self.a_decel),
            ("v_min", self.v_min),
            ("v_max", self.v_max),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("vehicle.{name} must be positive, got {v}"));
            }
        }
        if self.v_min > self.v_max {
            return Err(format!("vehicle.v_min ({}) exceeds vehicle.v_max ({})", self.v_min, self.v_max));
        }
        if self.max_steer >= std::f64::consts::FRAC_PI_2 {
            return Err(format!("vehicle.max_steer must be below pi/2, got {}", self.max_steer));
        }
        Ok(())
    }
}

/// Tracking and timing parameters of the DTR controller.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlParams {
    /// Lookahead gain (s): lookahead distance = k_la * speed, clamped.
    pub k_la: f64,
    pub la_min: f64,
    pub la_max: f64,
    /// Arc length over which the tightest curvature limits the speed.
    pub preview: f64,
    /// Curvatures at or below this count as straight.
    pub kappa_eps: f64,
    /// Control period (s).
    pub dt: f64,
    /// Cycles a previous path may be reused when extraction fails.
    pub n_hold: usize,
}

impl Default for ControlParams {
    fn default() -> Self {
        Self { k_la: 0.6, la_min: 0.6, la_max: 3.0, preview: 4.0, kappa_eps: 1e-3, dt: 0.025, n_hold: 5 }
    }
}

impl ControlParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("k_la", self.k_la), ("kappa_eps", self.kappa_eps), ("preview", self.preview)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("control.{name} must be non-negative, got {v}"));
            }
        }
        if !(self.la_min > 0.0 && self.la_min <= self.la_max) {
            return Err(format!("control.la_min must be positive and at most la_max, got {} / {}", self.la_min, self.la_max));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(format!("control.dt must be positive, got {}", self.dt));
        }
        Ok(())
    }
}

/// Full DTR configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtrConfig {
    pub centerline: CenterlineConfig,
    pub control: ControlParams,
    pub vehicle: VehicleParams,
}

impl DtrConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.centerline.validate()?;
        self.control.validate()?;
        self.vehicle.validate()
    }
}

/// Steering angle (rad, positive left) and target speed (m/s).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlCommand {
    pub steer: f64,
    pub speed: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ControllerState {
    pub previous_speed: f64,
    pub held_path: Option<CenterlinePath>,
    pub hold_count: usize,
}

pub fn lookahead_distance(v: f64, k_la: f64, la_min: f64, la_max: f64) -> f64 {
    (k_la * v).clamp(la_min, la_max)
}

/// First path sample at least `clamp(k_la * v, la_min, la_max)` along the
/// path, or the last sample when the path is shorter.
pub fn lookahead_point(path: &CenterlinePath, v: f64, k_la: f64, la_min: f64, la_max: f64) -> Result<Point2, ControlError> {
    let last = *path.points.last().ok_or(ControlError::EmptyPath)?;
    let distance = lookahead_distance(v, k_la, la_min, la_max);
    Ok(path
        .arc_length
        .iter()
        .position(|&s| s >= distance)
        .map_or(last, |i| path.points[i]))
}

/// Pure-pursuit steering toward `target` for a bicycle at the origin
/// heading +x.
pub fn pure_pursuit_steer(target: Point2, wheelbase: f64, max_steer: f64) -> Result<f64, ControlError> {
    let distance = target.norm();
    if distance <= f64::EPSILON {
        return Err(ControlError::TargetAtOrigin);
    }
    let alpha = target.y.atan2(target.x);
    Ok((2.0 * wheelbase * alpha.sin() / distance).atan().clamp(-max_steer, max_steer))
}

/// Highest speed at curvature `kappa` that keeps the lateral acceleration
/// within `mu * a_y_max`, clamped to `[v_min, v_max]`.
pub fn admissible_speed(kappa: f64, p: &VehicleParams, kappa_eps: f64) -> f64 {
    if kappa <= kappa_eps {
        return p.v_max;
    }
    (p.mu * p.a_y_max / kappa).sqrt().clamp(p.v_min, p.v_max)
}

/// Tightest admissible speed over the samples within `preview` of the path
/// start.
pub fn target_speed(path: &CenterlinePath, preview: f64, p: &VehicleParams, kappa_eps: f64) -> f64 {
    path.curvature
        .iter()
        .zip(&path.arc_length)
        .take_while(|(_, &s)| s <= preview)
        .map(|(&k, _)| admissible_speed(k, p, kappa_eps))
        .fold(p.v_max, f64::min)
}

/// Clamps `target` to what the longitudinal limits allow within `dt`.
///
/// The window bounds are nudged inward by an ulp where needed so that the
/// realized change `|v - previous|` never exceeds `a * dt` in floating point.
pub fn limit_acceleration(previous: f64, target: f64, dt: f64, p: &VehicleParams) -> f64 {
    let (rise, fall) = (p.a_accel * dt, p.a_decel * dt);
    let mut upper = previous + rise;
    while upper - previous > rise {
        upper = upper.next_down();
    }
    let mut lower = previous - fall;
    while previous - lower > fall {
        lower = lower.next_up();
    }
    target.clamp(lower, upper)
}

/// Steering and speed from a centerline.
fn track_path(path: &CenterlinePath, previous_speed: f64, cfg: &DtrConfig) -> Result<(f64, f64), ControlError> {
    let c = &cfg.control;
    let target = lookahead_point(path, previous_speed, c.k_la, c.la_min, c.la_max)?;
    let steer = pure_pursuit_steer(target, cfg.vehicle.wheelbase, cfg.vehicle.max_steer)?;
    Ok((steer, target_speed(path, c.preview, &cfg.vehicle, c.kappa_eps)))
}

/// One DTR control cycle.
///
/// When no centerline can be extracted the previous path is reused for up
/// to `n_hold` cycles; after that the car steers straight and slows toward
/// `v_min`.
pub fn dtr_step(scan: &LidarScan, state: &ControllerState, cfg: &DtrConfig) -> (ControlCommand, ControllerState) {
    let extracted = extract_centerline(scan, &cfg.centerline);
    let (held_path, hold_count, tracked) = match extracted {
        Some(path) => {
            let tracked = track_path(&path, state.previous_speed, cfg).ok();
            (Some(path), 0, tracked)
        }
        None => match &state.held_path {
            Some(path) if state.hold_count < cfg.control.n_hold => {
                let tracked = track_path(path, state.previous_speed, cfg).ok();
                (Some(path.clone()), state.hold_count + 1, tracked)
            }
            _ => (None, cfg.control.n_hold, None),
        },
    };
    let (steer, target) = tracked.unwrap_or((0.0, cfg.vehicle.v_min));
    let speed = limit_acceleration(state.previous_speed, target, cfg.control.dt, &cfg.vehicle);
    let command = ControlCommand { steer, speed };
    (command, ControllerState { previous_speed: speed, held_path, hold_count })
}

/// Stateful wrapper around [`dtr_step`].
#[derive(Clone, Debug, Default)]
pub struct DtrController {
    pub config: DtrConfig,
    pub state: ControllerState,
}

impl DtrController {
    pub fn new(config: DtrConfig) -> Self {
        Self { config, state: ControllerState::default() }
    }

    pub fn step(&mut self, scan: &LidarScan) -> ControlCommand {
        let (cmd, next) = dtr_step(scan, &self.state, &self.config);
        self.state = next;
        cmd
    }
}
