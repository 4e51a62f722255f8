//! Reactive racing from raw 2D LiDAR scans.
//!
//! The DTR controller triangulates the scan, keeps the triangles that span
//! the track between two distinct wall segments, chains their circumcenters
//! into a centerline, and tracks it with pure pursuit at a curvature- and
//! friction-limited speed. A follow-the-gap controller serves as the
//! baseline, and [`sim`] provides a deterministic closed-loop world to race
//! both in.

pub mod geometry;
pub mod scan;
pub mod centerline;
pub mod control;
pub mod ftg;
pub mod sim;
