use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::{DataError, RawAnnotation, Scene};
use crate::model::Point;

/// Spacing of the key-frame grid in seconds.
pub const KEY_FRAME_DT: f64 = 0.4;

const TIME_TOL: f64 = 1e-9;

/// A regridded scene and the number of pedestrians dropped because they had
/// a single observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Regridded {
    pub scene: Scene,
    pub dropped: usize,
}

/// Resamples each pedestrian's track onto a uniform 0.4 s grid by linear
/// interpolation. Frame `f` is taken to occur at time `f · source_dt`. The
/// grid starts at the earliest observation. No value is produced outside a
/// pedestrian's observed time span; grid points within 1e-9 s of an
/// observation take its value exactly.
pub fn regrid(
    annotations: &[RawAnnotation],
    source_dt: f64,
    name: &str,
) -> Result<Regridded, DataError> {
    if !(source_dt.is_finite() && source_dt > 0.0) {
        return Err(DataError::BadTimestep(source_dt));
    }
    let mut tracks: BTreeMap<u64, Vec<(f64, Point)>> = BTreeMap::new();
    for a in annotations {
        tracks
            .entry(a.ped_id)
            .or_default()
            .push((a.frame_id as f64 * source_dt, [a.x, a.y]));
    }
    let mut dropped = 0;
    tracks.retain(|_, obs| {
        obs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let keep = obs.len() > 1;
        if !keep {
            dropped += 1;
        }
        keep
    });

    let start = tracks
        .values()
        .map(|o| o[0].0)
        .fold(f64::INFINITY, f64::min);
    let end = tracks
        .values()
        .map(|o| o[o.len() - 1].0)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut frames: Vec<BTreeMap<u64, Point>> = Vec::new();
    if start.is_finite() {
        let count = libm::floor((end - start) / KEY_FRAME_DT + TIME_TOL) as usize + 1;
        frames.resize(count, BTreeMap::new());
        for (&id, obs) in &tracks {
            let first = obs[0].0;
            let last = obs[obs.len() - 1].0;
            let k0 = libm::ceil((first - start) / KEY_FRAME_DT - TIME_TOL).max(0.0) as usize;
            let mut seg = 0;
            for (k, frame) in frames.iter_mut().enumerate().skip(k0) {
                let t = start + k as f64 * KEY_FRAME_DT;
                if t > last + TIME_TOL {
                    break;
                }
                while seg + 2 < obs.len() && obs[seg + 1].0 < t - TIME_TOL {
                    seg += 1;
                }
                frame.insert(id, sample(&obs[seg], &obs[seg + 1], t));
            }
        }
    }
    Ok(Regridded {
        scene: Scene {
            name: String::from(name),
            dt: KEY_FRAME_DT,
            start_time: if start.is_finite() { start } else { 0.0 },
            frames,
        },
        dropped,
    })
}

fn sample(a: &(f64, Point), b: &(f64, Point), t: f64) -> Point {
    if libm::fabs(t - a.0) <= TIME_TOL {
        return a.1;
    }
    if libm::fabs(t - b.0) <= TIME_TOL {
        return b.1;
    }
    let u = (t - a.0) / (b.0 - a.0);
    [
        a.1[0] + u * (b.1[0] - a.1[0]),
        a.1[1] + u * (b.1[1] - a.1[1]),
    ]
}
