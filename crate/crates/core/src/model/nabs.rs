//! Normalized absolute (Nabs) coordinates: offsets from the position at the
//! last observed frame.

use alloc::vec::Vec;

/// World coordinates in meters.
pub type Point = [f64; 2];

/// Offsets of `traj` from `traj[anchor]`. `None` if `anchor` is out of range.
pub fn nabs_encode(traj: &[Point], anchor: usize) -> Option<Vec<Point>> {
    let a = *traj.get(anchor)?;
    Some(traj.iter().map(|p| [p[0] - a[0], p[1] - a[1]]).collect())
}

/// Absolute positions from offsets relative to `anchor`.
pub fn nabs_decode(offsets: &[Point], anchor: Point) -> Vec<Point> {
    offsets
        .iter()
        .map(|d| [d[0] + anchor[0], d[1] + anchor[1]])
        .collect()
}
