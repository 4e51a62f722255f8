//! SVG renders of tracks, trajectories and pipeline dumps.
//!
//! World coordinates are drawn inside a group that flips the y axis, so the
//! viewBox is expressed in flipped coordinates.

use std::fmt::Write;

use dtr_core::geometry::Point2;
use dtr_core::sim::TrackDefinition;

use crate::snapshot::SnapshotDump;

const SEGMENT_COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn coords(points: impl IntoIterator<Item = Point2>) -> String {
    points.into_iter().map(|p| format!("{:.4},{:.4}", p.x, p.y)).collect::<Vec<_>>().join(" ")
}

fn closed_path(points: &[Point2]) -> String {
    let mut d = String::new();
    for (i, p) in points.iter().enumerate() {
        let _ = write!(d, "{}{:.4},{:.4} ", if i == 0 { "M" } else { "L" }, p.x, p.y);
    }
    d.push('Z');
    d
}

/// `(min_x, min_y, width, height)` of the track bounds grown by 5% on
/// every side.
pub fn view_box(track: &TrackDefinition) -> (f64, f64, f64, f64) {
    let (lo, hi) = track.bounds();
    let (w, h) = (hi.x - lo.x, hi.y - lo.y);
    let (mx, my) = (0.05 * w, 0.05 * h);
    (lo.x - mx, -(hi.y + my), w + 2.0 * mx, h + 2.0 * my)
}

pub fn render(track: &TrackDefinition, trajectory: Option<&[Point2]>, dump: Option<&SnapshotDump>) -> String {
    let (x, y, w, h) = view_box(track);
    let stroke = 0.002 * w.max(h);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x:.4} {y:.4} {w:.4} {h:.4}" width="{:.0}" height="{:.0}">"#,
        800.0,
        800.0 * h / w
    );
    let _ = writeln!(s, "<title>{}</title>", escape(&track.name));
    let _ = writeln!(s, r#"<g transform="scale(1,-1)" fill="none" stroke-width="{stroke:.5}">"#);

    for region in &track.trap_regions {
        let _ = writeln!(s, r##"<polygon class="trap" points="{}" fill="#f4cccc" stroke="none"/>"##, coords(region.iter().copied()));
    }
    for (class, poly) in [("boundary outer", &track.outer), ("boundary inner", &track.inner)] {
        if !poly.is_empty() {
            let _ = writeln!(s, r#"<path class="{class}" d="{}" stroke="black"/>"#, closed_path(poly));
        }
    }
    for poly in &track.obstacles {
        let _ = writeln!(s, r#"<path class="obstacle" d="{}" stroke="black" fill="gray"/>"#, closed_path(poly));
    }
    let (a, b) = track.finish_line;
    let _ = writeln!(
        s,
        r##"<line class="finish" x1="{:.4}" y1="{:.4}" x2="{:.4}" y2="{:.4}" stroke="#888888"/>"##,
        a.x, a.y, b.x, b.y
    );

    if let Some(dump) = dump {
        render_dump(&mut s, dump, stroke);
    }
    if let Some(traj) = trajectory {
        let _ = writeln!(s, r##"<polyline class="trajectory" points="{}" stroke="#0066cc"/>"##, coords(traj.iter().copied()));
    }
    s.push_str("</g>\n</svg>\n");
    s
}

fn render_dump(s: &mut String, dump: &SnapshotDump, stroke: f64) {
    let world = |p: Point2| dump.to_world(p);
    let trace = &dump.trace;
    let tri = &trace.triangulation;
    for (t, verdict) in tri.triangles.iter().zip(&trace.verdicts) {
        let pts = t.vertices().map(|i| world(tri.points[i]));
        if verdict.retained {
            let _ = writeln!(s, r##"<polygon class="retained" points="{}" stroke="#2ca02c"/>"##, coords(pts));
        } else {
            let _ = writeln!(
                s,
                r##"<polygon class="filtered" points="{}" stroke="#aaaaaa" stroke-dasharray="{:.5},{:.5}"/>"##,
                coords(pts),
                3.0 * stroke,
                2.0 * stroke
            );
        }
    }
    let r = 1.5 * stroke;
    for p in &trace.points {
        let color = p.segment_id.map_or("#000000", |id| SEGMENT_COLORS[id % SEGMENT_COLORS.len()]);
        let q = world(p.position);
        let _ = writeln!(s, r#"<circle class="scan" cx="{:.4}" cy="{:.4}" r="{r:.5}" fill="{color}" stroke="none"/>"#, q.x, q.y);
    }
    for (&c, &candidate) in tri.circumcenters.iter().zip(&trace.candidate) {
        let q = world(c);
        let (class, color) = if candidate { ("circumcenter candidate", "#ff7f0e") } else { ("circumcenter", "#cccccc") };
        let _ = writeln!(s, r#"<circle class="{class}" cx="{:.4}" cy="{:.4}" r="{r:.5}" fill="{color}" stroke="none"/>"#, q.x, q.y);
    }
    if let Some(path) = &trace.path {
        let _ = writeln!(
            s,
            r##"<polyline class="centerline" points="{}" stroke="#d62728" stroke-width="{:.5}"/>"##,
            coords(path.points.iter().map(|&p| world(p))),
            2.0 * stroke
        );
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
