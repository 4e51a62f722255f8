//! Centerline extraction from a segmented scan.
//!
//! Triangles of the scan's Delaunay triangulation that plausibly span the
//! track are kept, their circumcenters are chained greedily from the car
//! outward, and the chain is smoothed and fitted with a cubic spline that is
//! resampled at uniform arc length with analytic curvature.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{delaunay_triangulate, triangle_metrics, Point2, Triangulation, EPS_GEOM};
use crate::scan::{scan_to_points, segment_walls, subsample_boxed, LidarScan, ScanPoint};

/// Nominal track width the area threshold is derived from.
pub const DEFAULT_TRACK_WIDTH: f64 = 2.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CenterlineError {
    #[error("Savitzky-Golay window must be odd, got {0}")]
    EvenWindow(usize),
    #[error("Savitzky-Golay order {order} must be smaller than the window {window}")]
    OrderTooLarge { order: usize, window: usize },
    #[error("path is degenerate: fewer than two distinct points")]
    DegeneratePath,
    #[error("resample spacing must be positive, got {0}")]
    InvalidSpacing(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleFilterParams {
    /// Two longest sides are "similar" when `s_max / s_mid <= 1 + tolerance`.
    pub isosceles_tolerance: f64,
    /// Minimum `s_max / s_min` for a pointed triangle.
    pub pointedness_min: f64,
    /// Triangles at least this large (m^2) are kept regardless of shape.
    pub area_min: f64,
    /// Only keep triangles touching at least two wall segments.
    pub require_two_classes: bool,
}

impl Default for TriangleFilterParams {
    fn default() -> Self {
        Self {
            isosceles_tolerance: 0.2,
            pointedness_min: 2.0,
            area_min: 0.5 * DEFAULT_TRACK_WIDTH * DEFAULT_TRACK_WIDTH,
            require_two_classes: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingParams {
    pub max_step: f64,
    pub backward_tolerance: f64,
}

impl Default for OrderingParams {
    fn default() -> Self {
        Self { max_step: 1.5, backward_tolerance: 0.2 }
    }
}

/// Everything the scan-to-centerline pipeline needs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CenterlineConfig {
    pub subsample_cell: f64,
    pub gap_threshold: f64,
    pub isosceles_tolerance: f64,
    pub pointedness_min: f64,
    pub area_min: f64,
    pub require_two_classes: bool,
    pub margin_free: f64,
    pub max_step: f64,
    pub backward_tolerance: f64,
    /// Minimum spacing between consecutive chain points fed to smoothing.
    pub waypoint_spacing: f64,
    pub sg_window: usize,
    pub sg_order: usize,
    pub resample_ds: f64,
}

impl Default for CenterlineConfig {
    fn default() -> Self {
        let filter = TriangleFilterParams::default();
        let ordering = OrderingParams::default();
        Self {
            subsample_cell: 0.10,
            gap_threshold: 0.5,
            isosceles_tolerance: filter.isosceles_tolerance,
            pointedness_min: filter.pointedness_min,
            area_min: filter.area_min,
            require_two_classes: filter.require_two_classes,
            margin_free: 0.15,
            max_step: ordering.max_step,
            backward_tolerance: ordering.backward_tolerance,
            waypoint_spacing: 0.3,
            sg_window: 7,
            sg_order: 3,
            resample_ds: 0.1,
        }
    }
}

impl CenterlineConfig {
    pub fn filter(&self) -> TriangleFilterParams {
        TriangleFilterParams {
            isosceles_tolerance: self.isosceles_tolerance,
            pointedness_min: self.pointedness_min,
            area_min: self.area_min,
            require_two_classes: self.require_two_classes,
        }
    }

    pub fn ordering(&self) -> OrderingParams {
        OrderingParams { max_step: self.max_step, backward_tolerance: self.backward_tolerance }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("subsample_cell", self.subsample_cell),
            ("gap_threshold", self.gap_threshold),
            ("max_step", self.max_step),
            ("resample_ds", self.resample_ds),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("centerline.{name} must be positive, got {v}"));
            }
        }
        let non_negative = [
            ("isosceles_tolerance", self.isosceles_tolerance),
            ("area_min", self.area_min),
            ("margin_free", self.margin_free),
            ("backward_tolerance", self.backward_tolerance),
            ("waypoint_spacing", self.waypoint_spacing),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) {
                return Err(format!("centerline.{name} must be non-negative, got {v}"));
            }
        }
        if !(self.pointedness_min >= 1.0) {
            return Err(format!("centerline.pointedness_min must be at least 1, got {}", self.pointedness_min));
        }
        if self.sg_window % 2 == 0 {
            return Err(CenterlineError::EvenWindow(self.sg_window).to_string());
        }
        if self.sg_order >= self.sg_window {
            return Err(CenterlineError::OrderTooLarge { order: self.sg_order, window: self.sg_window }.to_string());
        }
        Ok(())
    }
}

/// Ordered racing line in the vehicle frame, resampled at uniform spacing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterlinePath {
    pub points: Vec<Point2>,
    /// Unsigned curvature (1/m), parallel to `points`.
    pub curvature: Vec<f64>,
    /// Arc length from the first sample, parallel to `points`.
    pub arc_length: Vec<f64>,
}

impl CenterlinePath {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.arc_length.last().copied().unwrap_or(0.0)
    }
}

/// Which of the triangle heuristics held for one triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleVerdict {
    pub isosceles: bool,
    pub pointed: bool,
    pub large: bool,
    pub two_classes: bool,
    pub retained: bool,
}

pub fn classify_triangles(tri: &Triangulation, labels: &[Option<usize>], p: &TriangleFilterParams) -> Vec<TriangleVerdict> {
    tri.triangles
        .iter()
        .map(|t| {
            let m = match triangle_metrics(t, &tri.points) {
                Ok(m) => m,
                Err(_) => {
                    return TriangleVerdict { isosceles: false, pointed: false, large: false, two_classes: false, retained: false }
                }
            };
            let isosceles = m.longest() <= (1.0 + p.isosceles_tolerance) * m.middle();
            let pointed = m.longest() >= p.pointedness_min * m.shortest();
            let large = m.area >= p.area_min;
            let ids = t.vertices().map(|v| labels.get(v).copied().flatten());
            let two_classes = match ids {
                [Some(a), Some(b), Some(c)] => a != b || b != c,
                _ => false,
            };
            let shape_ok = (isosceles && pointed) || large;
            TriangleVerdict {
                isosceles,
                pointed,
                large,
                two_classes,
                retained: shape_ok && (two_classes || !p.require_two_classes),
            }
        })
        .collect()
}

/// Indices of the triangles that pass the shape heuristics and, if
/// requested, the two-class rule. `labels` holds a segment id per point of
/// `tri`.
pub fn filter_triangles(tri: &Triangulation, labels: &[Option<usize>], p: &TriangleFilterParams) -> Vec<usize> {
    classify_triangles(tri, labels, p)
        .iter()
        .enumerate()
        .filter(|(_, v)| v.retained)
        .map(|(i, _)| i)
        .collect()
}

/// `true` when `c` lies ahead of the car and inside the free space seen by
/// the nearest beam, with `margin` to spare.
pub fn is_candidate(c: Point2, scan: &LidarScan, margin: f64) -> bool {
    if !(c.x > 0.0) {
        return false;
    }
    let Some(beam) = scan.beam_for_bearing(c.y.atan2(c.x)) else {
        return false;
    };
    let measured = if scan.is_no_return(beam) { scan.range_max } else { scan.ranges[beam] };
    c.norm() < measured - margin
}

pub fn candidate_circumcenters(tri: &Triangulation, retained: &[usize], scan: &LidarScan, margin: f64) -> Vec<Point2> {
    retained
        .iter()
        .map(|&i| tri.circumcenters[i])
        .filter(|&c| is_candidate(c, scan, margin))
        .collect()
}

/// Greedy nearest-neighbor chain from the vehicle (origin, heading +x).
///
/// Each step takes the closest unvisited candidate within `max_step` whose
/// displacement does not point back more than `backward_tolerance` along
/// the current direction; the direction follows the last displacement.
pub fn order_greedy(candidates: &[Point2], p: &OrderingParams) -> Vec<Point2> {
    let mut visited = vec![false; candidates.len()];
    let mut chain = Vec::new();

    let nearest = |from: Point2, dir: Point2, max_step: f64, visited: &[bool]| {
        let mut best: Option<(usize, f64)> = None;
        for (i, &c) in candidates.iter().enumerate() {
            if visited[i] {
                continue;
            }
            let d = c - from;
            let dist = d.norm();
            if dist > max_step || d.dot(dir) < -p.backward_tolerance {
                continue;
            }
            if best.is_none_or(|(_, bd)| dist < bd) {
                best = Some((i, dist));
            }
        }
        best.map(|(i, _)| i)
    };

    let mut dir = Point2::new(1.0, 0.0);
    let Some(first) = nearest(Point2::ORIGIN, dir, f64::INFINITY, &visited) else {
        return chain;
    };
    visited[first] = true;
    chain.push(candidates[first]);
    let mut current = candidates[first];

    while let Some(next) = nearest(current, dir, p.max_step, &visited) {
        visited[next] = true;
        let step = candidates[next] - current;
        let len = step.norm();
        if len > EPS_GEOM {
            dir = step * (1.0 / len);
        }
        current = candidates[next];
        chain.push(current);
    }
    chain
}

/// Least-squares Savitzky-Golay weights. Row `r` evaluates the fitted
/// polynomial at window position `r` (0..window), so edge samples are
/// smoothed with the same window shifted inward.
fn savitzky_golay_weights(window: usize, order: usize) -> Vec<Vec<f64>> {
    let half = (window / 2) as f64;
    let terms = order + 1;
    // Normal matrix of the Vandermonde design with centered abscissae.
    let design: Vec<Vec<f64>> = (0..window)
        .map(|j| {
            let x = j as f64 - half;
            (0..terms).map(|k| x.powi(k as i32)).collect()
        })
        .collect();
    let mut normal = vec![vec![0.0; terms]; terms];
    for row in &design {
        for a in 0..terms {
            for b in 0..terms {
                normal[a][b] += row[a] * row[b];
            }
        }
    }
    let inverse = invert(normal);
    // weights[r][j] = design[r] . inverse . design[j]
    (0..window)
        .map(|r| {
            let left: Vec<f64> = (0..terms).map(|b| (0..terms).map(|a| design[r][a] * inverse[a][b]).sum()).collect();
            design.iter().map(|row| left.iter().zip(row).map(|(l, d)| l * d).sum()).collect()
        })
        .collect()
}

/// Gauss-Jordan inverse with partial pivoting; the matrices here are tiny
/// and symmetric positive definite.
fn invert(mut m: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap_or(col);
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let d = m[col][col];
        for j in 0..n {
            m[col][j] /= d;
            inv[col][j] /= d;
        }
        for row in 0..n {
            if row != col {
                let f = m[row][col];
                if f != 0.0 {
                    for j in 0..n {
                        m[row][j] -= f * m[col][j];
                        inv[row][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    inv
}

/// Per-coordinate Savitzky-Golay smoothing. Inputs shorter than the window
/// are returned unchanged.
pub fn smooth_savitzky_golay(points: &[Point2], window: usize, order: usize) -> Result<Vec<Point2>, CenterlineError> {
    if window % 2 == 0 {
        return Err(CenterlineError::EvenWindow(window));
    }
    if order >= window {
        return Err(CenterlineError::OrderTooLarge { order, window });
    }
    let n = points.len();
    if n < window {
        return Ok(points.to_vec());
    }
    let weights = savitzky_golay_weights(window, order);
    let half = window / 2;
    Ok((0..n)
        .map(|i| {
            let start = i.saturating_sub(half).min(n - window);
            let row = &weights[i - start];
            let mut acc = Point2::ORIGIN;
            for (w, p) in row.iter().zip(&points[start..start + window]) {
                acc = acc + *p * *w;
            }
            acc
        })
        .collect())
}

/// Second derivatives of the natural cubic spline through `(knots, values)`.
fn natural_spline_moments(knots: &[f64], values: &[f64]) -> Vec<f64> {
    let n = knots.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior equations.
    let k = n - 2;
    let mut diag = vec![0.0; k];
    let mut upper = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    for i in 1..n - 1 {
        let h0 = knots[i] - knots[i - 1];
        let h1 = knots[i + 1] - knots[i];
        diag[i - 1] = 2.0 * (h0 + h1);
        upper[i - 1] = h1;
        rhs[i - 1] = 6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
    }
    for i in 1..k {
        let lower = knots[i + 1] - knots[i];
        let w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for i in (0..k - 1).rev() {
        m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
    }
    m
}

/// Parametric natural cubic spline over chord-length knots.
struct ParametricSpline {
    knots: Vec<f64>,
    points: Vec<Point2>,
    mx: Vec<f64>,
    my: Vec<f64>,
}

#[derive(Clone, Copy)]
struct SplineSample {
    pos: Point2,
    d1: Point2,
    d2: Point2,
}

impl ParametricSpline {
    fn new(points: Vec<Point2>) -> Self {
        let mut knots = Vec::with_capacity(points.len());
        let mut u = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                u += p.distance(points[i - 1]);
            }
            knots.push(u);
        }
        let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
        let mx = natural_spline_moments(&knots, &xs);
        let my = natural_spline_moments(&knots, &ys);
        Self { knots, points, mx, my }
    }

    fn segments(&self) -> usize {
        self.points.len() - 1
    }

    /// Position and derivatives at local parameter `t` in segment `i`.
    fn eval(&self, i: usize, t: f64) -> SplineSample {
        let h = self.knots[i + 1] - self.knots[i];
        let (a, b) = ((h - t) / h, t / h);
        let comp = |m: &[f64], v0: f64, v1: f64| {
            let (m0, m1) = (m[i], m[i + 1]);
            let value = a * v0 + b * v1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
            let d1 = (v1 - v0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
            let d2 = a * m0 + b * m1;
            (value, d1, d2)
        };
        let (p0, p1) = (self.points[i], self.points[i + 1]);
        let (x, dx, ddx) = comp(&self.mx, p0.x, p1.x);
        let (y, dy, ddy) = comp(&self.my, p0.y, p1.y);
        SplineSample { pos: Point2::new(x, y), d1: Point2::new(dx, dy), d2: Point2::new(ddx, ddy) }
    }

    fn speed(&self, i: usize, t: f64) -> f64 {
        self.eval(i, t).d1.norm()
    }

    /// Arc length of segment `i` from its start to local parameter `t`
    /// (5-point Gauss-Legendre).
    fn arc(&self, i: usize, t: f64) -> f64 {
        const NODES: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
        const WEIGHTS: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let half = 0.5 * t;
        NODES.iter().zip(WEIGHTS).map(|(x, w)| w * self.speed(i, half * (1.0 + x))).sum::<f64>() * half
    }

    /// Local parameter in segment `i` at which the arc length from the
    /// segment start reaches `target`.
    fn invert_arc(&self, i: usize, target: f64, seg_len: f64) -> f64 {
        let h = self.knots[i + 1] - self.knots[i];
        let mut t = (target / seg_len.max(f64::MIN_POSITIVE) * h).clamp(0.0, h);
        for _ in 0..8 {
            let err = self.arc(i, t) - target;
            let speed = self.speed(i, t);
            if speed <= f64::MIN_POSITIVE {
                break;
            }
            let next = (t - err / speed).clamp(0.0, h);
            if (next - t).abs() < 1e-12 {
                t = next;
                break;
            }
            t = next;
        }
        t
    }
}

fn curvature(d1: Point2, d2: Point2) -> f64 {
    let speed2 = d1.norm_squared();
    if speed2 <= f64::MIN_POSITIVE {
        return 0.0;
    }
    d1.cross(d2).abs() / (speed2 * speed2.sqrt())
}

/// Fits a natural cubic spline through `points` (chord-length parameter) and
/// resamples it every `ds` meters of arc length, ending exactly at the last
/// point.
pub fn fit_spline_resample(points: &[Point2], ds: f64) -> Result<CenterlinePath, CenterlineError> {
    if !(ds > 0.0) {
        return Err(CenterlineError::InvalidSpacing(ds));
    }
    let mut distinct: Vec<Point2> = Vec::with_capacity(points.len());
    for &p in points {
        if distinct.last().is_none_or(|q: &Point2| q.distance(p) > EPS_GEOM) {
            distinct.push(p);
        }
    }
    if distinct.len() < 2 {
        return Err(CenterlineError::DegeneratePath);
    }

    let spline = ParametricSpline::new(distinct);
    let seg_lengths: Vec<f64> = (0..spline.segments())
        .map(|i| spline.arc(i, spline.knots[i + 1] - spline.knots[i]))
        .collect();
    let total: f64 = seg_lengths.iter().sum();
    let count = (total / ds + 1e-9).floor() as usize;
    // The last sample sits on the path end: a remainder within 5% of `ds`
    // stretches the final gap, a longer one gets a short extra gap.
    let remainder = total - count as f64 * ds;
    let count = if count == 0 || remainder > 0.05 * ds { count + 1 } else { count };

    let mut path = CenterlinePath {
        points: Vec::with_capacity(count + 1),
        curvature: Vec::with_capacity(count + 1),
        arc_length: Vec::with_capacity(count + 1),
    };
    let (mut seg, mut seg_start) = (0, 0.0);
    for k in 0..=count {
        let s = if k == count { total } else { k as f64 * ds };
        while seg + 1 < seg_lengths.len() && s > seg_start + seg_lengths[seg] {
            seg_start += seg_lengths[seg];
            seg += 1;
        }
        let t = spline.invert_arc(seg, (s - seg_start).min(seg_lengths[seg]), seg_lengths[seg]);
        let sample = spline.eval(seg, t);
        path.points.push(sample.pos);
        path.curvature.push(curvature(sample.d1, sample.d2));
        path.arc_length.push(s);
    }
    Ok(path)
}

/// Every intermediate product of one pipeline run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    /// Subsampled, segmented scan points (vehicle frame).
    pub points: Vec<ScanPoint>,
    pub triangulation: Triangulation,
    pub verdicts: Vec<TriangleVerdict>,
    /// Per triangle: whether its circumcenter survived the candidate test.
    pub candidate: Vec<bool>,
    pub chain: Vec<Point2>,
    /// The chain thinned to `waypoint_spacing`.
    pub waypoints: Vec<Point2>,
    /// Smoothed waypoints.
    pub smoothed: Vec<Point2>,
    pub path: Option<CenterlinePath>,
}

/// Drops chain points closer than `spacing` to the last point kept.
pub fn thin_chain(chain: &[Point2], spacing: f64) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::with_capacity(chain.len());
    for &p in chain {
        if out.last().is_none_or(|last| last.distance(p) >= spacing) {
            out.push(p);
        }
    }
    out
}

/// Runs the full pipeline and keeps every intermediate product.
pub fn trace_centerline(scan: &LidarScan, cfg: &CenterlineConfig) -> PipelineTrace {
    let raw = scan_to_points(scan);
    let points = segment_walls(&subsample_boxed(&raw, cfg.subsample_cell), cfg.gap_threshold);
    let positions: Vec<Point2> = points.iter().map(|p| p.position).collect();
    let triangulation = delaunay_triangulate(&positions);
    let labels: Vec<Option<usize>> = triangulation.source.iter().map(|&i| points[i].segment_id).collect();
    let verdicts = classify_triangles(&triangulation, &labels, &cfg.filter());
    let candidate: Vec<bool> = verdicts
        .iter()
        .zip(&triangulation.circumcenters)
        .map(|(v, &c)| v.retained && is_candidate(c, scan, cfg.margin_free))
        .collect();
    let candidates: Vec<Point2> = triangulation
        .circumcenters
        .iter()
        .zip(&candidate)
        .filter(|(_, &keep)| keep)
        .map(|(&c, _)| c)
        .collect();
    let chain = order_greedy(&candidates, &cfg.ordering());

    let waypoints = thin_chain(&chain, cfg.waypoint_spacing);

    let mut trace = PipelineTrace { points, triangulation, verdicts, candidate, chain, waypoints, ..Default::default() };
    if trace.waypoints.len() < 2 {
        return trace;
    }
    let Ok(smoothed) = smooth_savitzky_golay(&trace.waypoints, cfg.sg_window, cfg.sg_order) else {
        return trace;
    };
    trace.path = fit_spline_resample(&smoothed, cfg.resample_ds).ok();
    trace.smoothed = smoothed;
    trace
}

/// Scan to centerline; `None` when fewer than two waypoints survive.
pub fn extract_centerline(scan: &LidarScan, cfg: &CenterlineConfig) -> Option<CenterlinePath> {
    trace_centerline(scan, cfg).path
}
