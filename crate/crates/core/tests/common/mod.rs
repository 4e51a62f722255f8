#![allow(dead_code)]

use dtr_core::geometry::Point2;
use dtr_core::scan::LidarScan;
use dtr_core::sim::{add_range_noise, simulate_lidar, LidarSpec, Pose, TrackDefinition, VehicleState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn shipped(name: &str) -> TrackDefinition {
    let text = match name {
        "corridor" => include_str!("../../../../tracks/corridor.json"),
        "oval" => include_str!("../../../../tracks/oval.json"),
        "trap" => include_str!("../../../../tracks/trap.json"),
        "gp" => include_str!("../../../../tracks/gp.json"),
        _ => panic!("no shipped track {name}"),
    };
    TrackDefinition::from_json(text).unwrap()
}

/// A drivable pose at least `clearance` from every wall, with any heading.
pub fn random_pose(track: &TrackDefinition, clearance: f64, rng: &mut ChaCha8Rng) -> Pose {
    let (lo, hi) = track.bounds();
    loop {
        let p = Point2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        let state = VehicleState { x: p.x, y: p.y, theta: 0.0, v: 0.0 };
        if track.is_drivable(p) && !dtr_core::sim::check_collision(&state, track, clearance) {
            return Pose { x: p.x, y: p.y, theta: rng.random_range(-3.14..3.14) };
        }
    }
}

/// Scans from random poses on the oval, trap and gp tracks, half of them
/// with range noise.
pub fn random_scans(count: usize, seed: u64) -> Vec<LidarScan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tracks = [shipped("oval"), shipped("trap"), shipped("gp")];
    (0..count)
        .map(|k| {
            let track = &tracks[k % tracks.len()];
            let pose = random_pose(track, 0.3, &mut rng);
            let mut scan = simulate_lidar(&VehicleState::at(pose), track, &LidarSpec::default());
            if k % 2 == 1 {
                add_range_noise(&mut scan, 0.01, &mut rng);
            }
            scan
        })
        .collect()
}
