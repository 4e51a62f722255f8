use std::collections::HashSet;

use dtr_core::geometry::{point_segment_distance, ray_segment_intersect, Point2};
use dtr_core::scan::{scan_to_points, segment_walls, subsample_boxed, LidarScan, ScanPoint};
use proptest::prelude::*;

const RANGE_MAX: f64 = 10.0;

/// Casts `n` beams over 270 degrees against one wall segment.
fn scan_of_wall(a: Point2, b: Point2, n: usize) -> LidarScan {
    let inc = 1.5 * std::f64::consts::PI / (n - 1) as f64;
    let mut scan = LidarScan { angle_min: -0.5 * (n - 1) as f64 * inc, angle_increment: inc, ranges: vec![RANGE_MAX; n], range_max: RANGE_MAX };
    for i in 0..n {
        let dir = Point2::from_polar(1.0, scan.beam_angle(i));
        if let Some(t) = ray_segment_intersect(Point2::ORIGIN, dir, a, b) {
            scan.ranges[i] = t.min(RANGE_MAX);
        }
    }
    scan
}

fn points(coords: &[(f64, f64)]) -> Vec<ScanPoint> {
    coords
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| ScanPoint { position: Point2::new(x, y), beam_index: i, segment_id: None })
        .collect()
}

fn cloud() -> impl Strategy<Value = Vec<ScanPoint>> {
    prop::collection::vec((-8.0..8.0f64, -8.0..8.0f64), 0..300).prop_map(|v| points(&v))
}

#[test]
fn wall_at_five_millimetre_spacing_matches_hash_grid() {
    let cell = 0.1;
    let pts: Vec<(f64, f64)> = (0..1080).map(|i| (1.0 + 0.005 * i as f64, 0.73)).collect();
    let input = points(&pts);
    let cells: HashSet<(i64, i64)> = pts.iter().map(|&(x, y)| ((x / cell).floor() as i64, (y / cell).floor() as i64)).collect();
    let out = subsample_boxed(&input, cell);
    assert_eq!(out.len(), cells.len());
    let out_cells: HashSet<(i64, i64)> =
        out.iter().map(|p| ((p.position.x / cell).floor() as i64, (p.position.y / cell).floor() as i64)).collect();
    assert_eq!(out_cells, cells);
}

#[test]
fn segment_examples() {
    let spaced: Vec<(f64, f64)> = (0..5).map(|i| (0.05 * i as f64, 0.0)).collect();
    assert!(segment_walls(&points(&spaced), 0.5).iter().all(|p| p.segment_id == Some(0)));
    let jump = points(&[(0.0, 0.0), (0.1, 0.0), (0.2, 0.0), (1.2, 0.0), (1.3, 0.0)]);
    let ids: Vec<_> = segment_walls(&jump, 0.3).iter().map(|p| p.segment_id.unwrap()).collect();
    assert_eq!(ids, [0, 0, 0, 1, 1]);
    assert!(segment_walls(&[], 0.5).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wall_points_lie_on_the_wall(
        ax in -6.0..6.0f64, ay in 0.5..6.0f64, bx in -6.0..6.0f64, by in 0.5..6.0f64, flip in any::<bool>(), n in 10usize..1100
    ) {
        let s = if flip { -1.0 } else { 1.0 };
        let (a, b) = (Point2::new(ax, s * ay), Point2::new(bx, s * by));
        prop_assume!(a.distance(b) > 1e-3);
        let scan = scan_of_wall(a, b, n);
        for p in scan_to_points(&scan) {
            prop_assert!(point_segment_distance(p.position, a, b) < 1e-9);
            let expected = Point2::from_polar(scan.ranges[p.beam_index], scan.beam_angle(p.beam_index));
            prop_assert!(p.position.distance(expected) < 1e-9);
        }
    }

    #[test]
    fn subsample_shrinks_and_is_idempotent(pts in cloud(), cell in 0.02..1.0f64) {
        let once = subsample_boxed(&pts, cell);
        prop_assert!(once.len() <= pts.len());
        prop_assert_eq!(subsample_boxed(&once, cell), once.clone());
        let cells: HashSet<(i64, i64)> =
            pts.iter().map(|p| ((p.position.x / cell).floor() as i64, (p.position.y / cell).floor() as i64)).collect();
        prop_assert_eq!(once.len(), cells.len());
        prop_assert!(once.windows(2).all(|w| w[0].beam_index < w[1].beam_index));
    }

    #[test]
    fn segment_count_matches_gap_count(pts in cloud(), threshold in 0.1..4.0f64) {
        let out = segment_walls(&pts, threshold);
        prop_assert_eq!(out.len(), pts.len());
        let gaps = pts.windows(2).filter(|w| w[0].position.distance(w[1].position) > threshold).count();
        let ids: HashSet<usize> = out.iter().map(|p| p.segment_id.unwrap()).collect();
        if !pts.is_empty() {
            prop_assert_eq!(ids.len(), gaps + 1);
            prop_assert_eq!(out.last().unwrap().segment_id, Some(gaps));
        }
        let contiguous = out.windows(2).all(|w| {
            let (a, b) = (w[0].segment_id.unwrap(), w[1].segment_id.unwrap());
            b == a || b == a + 1
        });
        prop_assert!(contiguous);
    }
}
