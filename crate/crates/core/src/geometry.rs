//! Planar primitives: tolerance-aware predicates, Delaunay triangulation,
//! circumcenters, triangle metrics and ray casting.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute geometric tolerance in meters used by every predicate.
pub const EPS_GEOM: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate triangle ({0}, {1}, {2}): vertices are collinear or coincident")]
    DegenerateTriangle(usize, usize, usize),
    #[error("triangle vertex index {index} out of bounds for {len} points")]
    IndexOutOfBounds { index: usize, len: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(range: f64, angle: f64) -> Self {
        Self::new(range * angle.cos(), range * angle.sin())
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotates by `angle` radians counter-clockwise about the origin.
    pub fn rotate(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, other: Point2, t: f64) -> Self {
        self + (other - self) * t
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Vertex indices into a point array. Triangles produced by
/// [`delaunay_triangulate`] are counter-clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triangle {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl Triangle {
    pub const fn new(a: usize, b: usize, c: usize) -> Self {
        Self { a, b, c }
    }

    pub fn vertices(&self) -> [usize; 3] {
        [self.a, self.b, self.c]
    }

    fn corners(&self, points: &[Point2]) -> Result<[Point2; 3], GeometryError> {
        let get = |i: usize| {
            points
                .get(i)
                .copied()
                .ok_or(GeometryError::IndexOutOfBounds { index: i, len: points.len() })
        };
        Ok([get(self.a)?, get(self.b)?, get(self.c)?])
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Triangulation {
    /// Deduplicated input points.
    pub points: Vec<Point2>,
    /// For each entry of `points`, the index of the input point it came from.
    pub source: Vec<usize>,
    pub triangles: Vec<Triangle>,
    /// Parallel to `triangles`.
    pub circumcenters: Vec<Point2>,
}

impl Triangulation {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn total_area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| signed_area(self.points[t.a], self.points[t.b], self.points[t.c]).abs())
            .sum()
    }
}

/// Twice the signed area of `abc`, evaluated so that swapping any two
/// arguments negates the result exactly.
fn orient_det(a: Point2, b: Point2, c: Point2) -> f64 {
    a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y)
}

fn signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * orient_det(a, b, c)
}

/// Sign of the signed area of `abc`: `+1` counter-clockwise, `-1` clockwise,
/// `0` when one vertex lies within [`EPS_GEOM`] of the line through the
/// other two (measured against the longest side).
pub fn orient2d(a: Point2, b: Point2, c: Point2) -> i8 {
    let det = orient_det(a, b, c);
    let longest = a.distance(b).max(b.distance(c)).max(c.distance(a));
    if det.abs() <= EPS_GEOM * longest {
        0
    } else if det > 0.0 {
        1
    } else {
        -1
    }
}

/// Raw in-circle determinant, positive when `p` is inside the circumcircle
/// of the counter-clockwise triangle `abc`.
fn incircle_det(a: Point2, b: Point2, c: Point2, p: Point2) -> f64 {
    let (ad, bd, cd) = (a - p, b - p, c - p);
    let (a2, b2, c2) = (ad.norm_squared(), bd.norm_squared(), cd.norm_squared());
    a2 * bd.cross(cd) + b2 * cd.cross(ad) + c2 * ad.cross(bd)
}

/// Strict in-circle test on raw corners; points within [`EPS_GEOM`] of the
/// circle count as outside. The triangle may have either orientation.
fn point_in_circumcircle(a: Point2, b: Point2, c: Point2, p: Point2) -> bool {
    let orientation = orient_det(a, b, c).signum();
    let det = incircle_det(a, b, c, p) * orientation;
    // det = |2A| * (R^2 - |p - o|^2) and 2R|2A| = l1 l2 l3, so an absolute
    // band of EPS_GEOM around the circle maps to EPS_GEOM * l1 l2 l3.
    let tol = EPS_GEOM * a.distance(b) * b.distance(c) * c.distance(a);
    det > tol
}

/// `true` iff `p` lies strictly inside the circumcircle of `t`; cocircular
/// points (within [`EPS_GEOM`]) are reported as not inside.
pub fn in_circumcircle(t: &Triangle, points: &[Point2], p: Point2) -> Result<bool, GeometryError> {
    let [a, b, c] = t.corners(points)?;
    if orient2d(a, b, c) == 0 {
        return Err(GeometryError::DegenerateTriangle(t.a, t.b, t.c));
    }
    Ok(point_in_circumcircle(a, b, c, p))
}

fn circumcenter_of(a: Point2, b: Point2, c: Point2) -> Point2 {
    // Work relative to the vertex opposite the longest edge: the two edge
    // vectors are then the short sides, which keeps the cancellation small.
    let (ab, bc, ca) = (a.distance(b), b.distance(c), c.distance(a));
    let (o, p, q) = if bc >= ab && bc >= ca {
        (a, b, c)
    } else if ca >= ab {
        (b, c, a)
    } else {
        (c, a, b)
    };
    let (u, v) = (p - o, q - o);
    let d = 2.0 * u.cross(v);
    let (u2, v2) = (u.norm_squared(), v.norm_squared());
    Point2::new(o.x + (v.y * u2 - u.y * v2) / d, o.y + (u.x * v2 - v.x * u2) / d)
}

pub fn circumcenter(t: &Triangle, points: &[Point2]) -> Result<Point2, GeometryError> {
    let [a, b, c] = t.corners(points)?;
    if orient2d(a, b, c) == 0 {
        return Err(GeometryError::DegenerateTriangle(t.a, t.b, t.c));
    }
    Ok(circumcenter_of(a, b, c))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleMetrics {
    /// Side lengths sorted ascending.
    pub sides: [f64; 3],
    pub area: f64,
}

impl TriangleMetrics {
    pub fn shortest(&self) -> f64 {
        self.sides[0]
    }

    pub fn middle(&self) -> f64 {
        self.sides[1]
    }

    pub fn longest(&self) -> f64 {
        self.sides[2]
    }
}

pub fn triangle_metrics(t: &Triangle, points: &[Point2]) -> Result<TriangleMetrics, GeometryError> {
    let [a, b, c] = t.corners(points)?;
    let mut sides = [a.distance(b), b.distance(c), c.distance(a)];
    sides.sort_by(f64::total_cmp);
    Ok(TriangleMetrics { sides, area: signed_area(a, b, c).abs() })
}

/// Distance along the ray `origin + t * direction` to the first point of the
/// segment `a-b`, or `None` if the ray misses it.
pub fn ray_segment_intersect(origin: Point2, direction: Point2, a: Point2, b: Point2) -> Option<f64> {
    let edge = b - a;
    let to_a = a - origin;
    let denom = direction.cross(edge);
    let scale = edge.norm().max(f64::MIN_POSITIVE);

    if denom.abs() <= 1e-12 * scale {
        // Parallel. Only a collinear overlap can be hit.
        if to_a.cross(direction).abs() > EPS_GEOM {
            return None;
        }
        let ta = to_a.dot(direction);
        let tb = (b - origin).dot(direction);
        let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
        return if hi < 0.0 {
            None
        } else {
            Some(lo.max(0.0))
        };
    }

    let t = to_a.cross(edge) / denom;
    let s = to_a.cross(direction) / denom;
    if t >= 0.0 && (0.0..=1.0).contains(&s) {
        Some(t)
    } else {
        None
    }
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let edge = b - a;
    let len2 = edge.norm_squared();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(edge) / len2).clamp(0.0, 1.0);
    p.distance(a + edge * t)
}

/// Even-odd point-in-polygon test; the polygon is implicitly closed.
pub fn point_in_polygon(p: Point2, polygon: &[Point2]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (polygon[i], polygon[j]);
        if (pi.y > p.y) != (pj.y > p.y) {
            let x_cross = pj.x + (p.y - pj.y) * (pi.x - pj.x) / (pi.y - pj.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Signed shoelace area of a closed polygon (positive when counter-clockwise).
pub fn polygon_area(polygon: &[Point2]) -> f64 {
    let n = polygon.len();
    (0..n).map(|i| polygon[i].cross(polygon[(i + 1) % n])).sum::<f64>() * 0.5
}

/// Iterates the edges of a closed polyline.
pub fn closed_edges(polygon: &[Point2]) -> impl Iterator<Item = (Point2, Point2)> + '_ {
    let n = polygon.len();
    (0..n).map(move |i| (polygon[i], polygon[(i + 1) % n]))
}

/// Convex hull (Andrew's monotone chain), counter-clockwise, collinear
/// points dropped.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|p, q| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2
                && orient_det(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Merges points closer than [`EPS_GEOM`], keeping the first occurrence.
/// Returns the surviving points and their input indices.
fn dedup_points(points: &[Point2]) -> (Vec<Point2>, Vec<usize>) {
    let key = |p: Point2| ((p.x / EPS_GEOM).floor() as i64, (p.y / EPS_GEOM).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::with_capacity(points.len());
    let mut kept = Vec::with_capacity(points.len());
    'outer: for (i, &p) in points.iter().enumerate() {
        let (kx, ky) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = grid.get(&(kx + dx, ky + dy)) {
                    if bucket.iter().any(|&j| points[j].distance(p) <= EPS_GEOM) {
                        continue 'outer;
                    }
                }
            }
        }
        grid.entry((kx, ky)).or_default().push(i);
        kept.push(i);
    }
    (kept.iter().map(|&i| points[i]).collect(), kept)
}

const GHOST: usize = usize::MAX;
const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug)]
struct Cell {
    v: [usize; 3],
    /// `n[i]` is the neighbor across the edge opposite `v[i]`.
    n: [usize; 3],
    alive: bool,
}

impl Cell {
    fn is_ghost(&self) -> bool {
        self.v.contains(&GHOST)
    }

    fn edge(&self, i: usize) -> (usize, usize) {
        (self.v[(i + 1) % 3], self.v[(i + 2) % 3])
    }
}

/// Incremental Bowyer-Watson construction with a ghost vertex closing the
/// convex hull, so the result always covers the hull exactly.
struct Builder<'a> {
    pts: &'a [Point2],
    cells: Vec<Cell>,
    free: Vec<usize>,
    last: usize,
    in_cavity: Vec<bool>,
}

impl<'a> Builder<'a> {
    fn new(pts: &'a [Point2], a: usize, b: usize, c: usize) -> Self {
        let (b, c) = if orient_det(pts[a], pts[b], pts[c]) > 0.0 { (b, c) } else { (c, b) };
        let mut builder = Self { pts, cells: Vec::new(), free: Vec::new(), last: 0, in_cavity: Vec::new() };
        let ids = [
            builder.alloc([a, b, c]),
            builder.alloc([c, b, GHOST]),
            builder.alloc([a, c, GHOST]),
            builder.alloc([b, a, GHOST]),
        ];
        builder.link(&ids, &HashMap::new());
        builder.last = ids[0];
        builder
    }

    fn alloc(&mut self, v: [usize; 3]) -> usize {
        let cell = Cell { v, n: [NONE; 3], alive: true };
        if let Some(id) = self.free.pop() {
            self.cells[id] = cell;
            self.in_cavity[id] = false;
            id
        } else {
            self.cells.push(cell);
            self.in_cavity.push(false);
            self.cells.len() - 1
        }
    }

    /// Connects `ids` to each other through shared edges and to the given
    /// outside neighbors (keyed by directed edge as seen from the new cell).
    fn link(&mut self, ids: &[usize], outside: &HashMap<(usize, usize), usize>) {
        let mut by_edge: HashMap<(usize, usize), (usize, usize)> = HashMap::with_capacity(ids.len() * 3);
        for &id in ids {
            for i in 0..3 {
                by_edge.insert(self.cells[id].edge(i), (id, i));
            }
        }
        for &id in ids {
            for i in 0..3 {
                let (u, v) = self.cells[id].edge(i);
                if let Some(&(other, _)) = by_edge.get(&(v, u)) {
                    self.cells[id].n[i] = other;
                } else if let Some(&other) = outside.get(&(u, v)) {
                    self.cells[id].n[i] = other;
                    let cell = &mut self.cells[other];
                    for j in 0..3 {
                        if cell.edge(j) == (v, u) {
                            cell.n[j] = id;
                        }
                    }
                }
            }
        }
    }

    fn conflicts(&self, id: usize, p: Point2) -> bool {
        let cell = &self.cells[id];
        if cell.is_ghost() {
            let g = cell.v.iter().position(|&v| v == GHOST).unwrap_or(2);
            let (u, v) = cell.edge(g);
            let (a, b) = (self.pts[u], self.pts[v]);
            match orient2d(a, b, p) {
                1 => true,
                0 => {
                    let d = b - a;
                    let t = (p - a).dot(d) / d.norm_squared();
                    t > 0.0 && t < 1.0
                }
                _ => false,
            }
        } else {
            let [a, b, c] = cell.v.map(|i| self.pts[i]);
            point_in_circumcircle(a, b, c, p)
        }
    }

    /// Finds a cell the new point must replace: the real triangle containing
    /// it, or a ghost whose hull edge it sees.
    fn locate(&self, p: Point2) -> usize {
        let mut id = self.last;
        if !self.cells[id].alive || self.cells[id].is_ghost() {
            id = self.cells.iter().position(|c| c.alive && !c.is_ghost()).unwrap_or(0);
        }
        let budget = 4 * self.cells.len() + 16;
        for step in 0..budget {
            let cell = &self.cells[id];
            if cell.is_ghost() {
                if self.conflicts(id, p) {
                    return id;
                }
                break;
            }
            let mut moved = false;
            for k in 0..3 {
                // Rotate the starting edge to avoid walking in circles.
                let i = (k + step) % 3;
                let (u, v) = cell.edge(i);
                if orient2d(self.pts[u], self.pts[v], p) < 0 {
                    id = cell.n[i];
                    moved = true;
                    break;
                }
            }
            if !moved {
                return id;
            }
        }
        // Walk failed; fall back to an exhaustive search.
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.alive)
            .find(|(i, _)| self.conflicts(*i, p))
            .map(|(i, _)| i)
            .unwrap_or(self.last)
    }

    fn insert(&mut self, idx: usize) {
        let p = self.pts[idx];
        let seed = self.locate(p);

        let mut cavity = vec![seed];
        self.in_cavity[seed] = true;
        let mut head = 0;
        while head < cavity.len() {
            let id = cavity[head];
            head += 1;
            for i in 0..3 {
                let nb = self.cells[id].n[i];
                if nb != NONE && !self.in_cavity[nb] && self.conflicts(nb, p) {
                    self.in_cavity[nb] = true;
                    cavity.push(nb);
                }
            }
        }

        // Grow the cavity until it is star-shaped from p and its boundary is a
        // single cycle; tolerance-based predicates can violate both.
        let boundary = loop {
            let mut boundary: Vec<(usize, usize, usize)> = Vec::new();
            let mut grow: Vec<usize> = Vec::new();
            let mut starts: HashMap<usize, usize> = HashMap::new();
            for &id in &cavity {
                for i in 0..3 {
                    let nb = self.cells[id].n[i];
                    if self.in_cavity[nb] {
                        continue;
                    }
                    let (u, v) = self.cells[id].edge(i);
                    if u != GHOST && v != GHOST && orient2d(self.pts[u], self.pts[v], p) <= 0 {
                        grow.push(nb);
                    }
                    if starts.insert(u, nb).is_some() {
                        grow.push(nb);
                    }
                    boundary.push((u, v, nb));
                }
            }
            if grow.is_empty() {
                break boundary;
            }
            for nb in grow {
                if !self.in_cavity[nb] {
                    self.in_cavity[nb] = true;
                    cavity.push(nb);
                }
            }
        };

        for &id in &cavity {
            self.cells[id].alive = false;
            self.in_cavity[id] = false;
            self.free.push(id);
        }

        let mut outside = HashMap::with_capacity(boundary.len());
        let mut ids = Vec::with_capacity(boundary.len());
        for (u, v, nb) in boundary {
            outside.insert((u, v), nb);
            ids.push(self.alloc([u, v, idx]));
        }
        self.link(&ids, &outside);
        self.last = ids
            .iter()
            .copied()
            .find(|&id| !self.cells[id].is_ghost())
            .unwrap_or(ids[0]);
    }
}

/// Delaunay triangulation of `points`.
///
/// Points closer than [`EPS_GEOM`] are merged first. Fewer than three
/// non-collinear points yield an empty triangulation. Output is
/// deterministic for a given input order.
pub fn delaunay_triangulate(points: &[Point2]) -> Triangulation {
    let finite: Vec<usize> = (0..points.len()).filter(|&i| points[i].is_finite()).collect();
    let filtered: Vec<Point2> = finite.iter().map(|&i| points[i]).collect();
    let (pts, kept) = dedup_points(&filtered);
    let source: Vec<usize> = kept.iter().map(|&k| finite[k]).collect();

    let empty = Triangulation { points: pts.clone(), source: source.clone(), ..Default::default() };
    if pts.len() < 3 {
        return empty;
    }

    let Some((a, b, c)) = initial_triangle(&pts) else {
        return empty;
    };

    let mut builder = Builder::new(&pts, a, b, c);
    for i in 0..pts.len() {
        if i != a && i != b && i != c {
            builder.insert(i);
        }
    }

    let triangles: Vec<Triangle> = builder
        .cells
        .iter()
        .filter(|c| c.alive && !c.is_ghost())
        .map(|c| Triangle::new(c.v[0], c.v[1], c.v[2]))
        .filter(|t| orient2d(pts[t.a], pts[t.b], pts[t.c]) != 0)
        .collect();
    let circumcenters = triangles
        .iter()
        .map(|t| circumcenter_of(pts[t.a], pts[t.b], pts[t.c]))
        .collect();
    Triangulation { points: pts, source, triangles, circumcenters }
}

fn initial_triangle(pts: &[Point2]) -> Option<(usize, usize, usize)> {
    let a = 0;
    let b = (1..pts.len()).find(|&i| pts[i].distance(pts[a]) > EPS_GEOM)?;
    let c = (1..pts.len()).find(|&i| i != b && orient2d(pts[a], pts[b], pts[i]) != 0)?;
    Some((a, b, c))
}
