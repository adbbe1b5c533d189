use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DataError, Scene, KEY_FRAME_DT};
use crate::model::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Two pedestrians side by side at a fixed lateral spacing.
    Parallel,
    /// A pedestrian cuts in diagonally and falls in behind another.
    Merging,
    /// A follower retraces a turning leader's path a few frames later.
    Following,
    /// Two pedestrians approach head-on and sidestep once close.
    Meeting,
    /// A pair walking together swerves around a standing pedestrian.
    GroupAvoid,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Parallel,
        ScenarioKind::Merging,
        ScenarioKind::Following,
        ScenarioKind::Meeting,
        ScenarioKind::GroupAvoid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Parallel => "parallel",
            ScenarioKind::Merging => "merging",
            ScenarioKind::Following => "following",
            ScenarioKind::Meeting => "meeting",
            ScenarioKind::GroupAvoid => "group_avoid",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| DataError::UnknownScenario(s.to_string()))
    }
}

/// Geometry of a synthetic scene. Distances in meters, speeds in m/s,
/// angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub speed: f64,
    /// Lateral gap for side-by-side walkers, longitudinal gap for followers.
    pub spacing: f64,
    /// Standard deviation of Gaussian noise added to every coordinate.
    pub noise: f64,
    pub frames: usize,
    /// Walking direction of the first pedestrian.
    pub heading: f64,
    pub origin: Point,
    /// Signed lateral offset between head-on walkers. Its sign picks the
    /// side each one steps to.
    pub lateral_offset: f64,
    /// Longitudinal gap below which avoiders start to sidestep.
    pub trigger_distance: f64,
    pub sidestep_speed: f64,
    /// Heading change of the leader halfway through a following scene.
    pub turn: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            speed: 1.2,
            spacing: 1.0,
            noise: 0.0,
            frames: 20,
            heading: 0.0,
            origin: [0.0, 0.0],
            lateral_offset: 0.3,
            trigger_distance: 4.0,
            sidestep_speed: 0.6,
            turn: 0.6,
        }
    }
}

impl SynthParams {
    fn validate(&self) -> Result<(), DataError> {
        let finite = [
            self.speed,
            self.spacing,
            self.noise,
            self.heading,
            self.origin[0],
            self.origin[1],
            self.lateral_offset,
            self.trigger_distance,
            self.sidestep_speed,
            self.turn,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(DataError::InvalidParameter("values must be finite"));
        }
        if self.speed <= 0.0 {
            return Err(DataError::InvalidParameter("speed must be positive"));
        }
        if self.spacing <= 0.0 {
            return Err(DataError::InvalidParameter("spacing must be positive"));
        }
        if self.noise < 0.0 {
            return Err(DataError::InvalidParameter("noise must be nonnegative"));
        }
        if self.frames < 2 {
            return Err(DataError::InvalidParameter("frames must be at least 2"));
        }
        Ok(())
    }
}

/// Builds a scene realizing `kind` on the 0.4 s grid. Every pedestrian is
/// present in every frame. `seed` only drives the position noise.
pub fn synth_scenario(
    kind: ScenarioKind,
    params: &SynthParams,
    seed: u64,
) -> Result<Scene, DataError> {
    params.validate()?;
    let (s, c) = libm::sincos(params.heading);
    let dir = [c, s];
    let normal = [-s, c];
    // tracks in a local frame: x along heading, y to the left
    let local = match kind {
        ScenarioKind::Parallel => parallel(params),
        ScenarioKind::Merging => merging(params),
        ScenarioKind::Following => following(params),
        ScenarioKind::Meeting => meeting(params),
        ScenarioKind::GroupAvoid => group_avoid(params),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal_dist = (params.noise > 0.0)
        .then(|| Normal::new(0.0, params.noise).expect("validated noise scale"));
    let mut frames = vec![BTreeMap::new(); params.frames];
    for (k, frame) in frames.iter_mut().enumerate() {
        for (id, track) in local.iter().enumerate() {
            let [u, v] = track[k];
            let mut p = [
                params.origin[0] + u * dir[0] + v * normal[0],
                params.origin[1] + u * dir[1] + v * normal[1],
            ];
            if let Some(n) = &normal_dist {
                p[0] += n.sample(&mut rng);
                p[1] += n.sample(&mut rng);
            }
            frame.insert(id as u64, p);
        }
    }
    Ok(Scene {
        name: String::from(kind.as_str()),
        dt: KEY_FRAME_DT,
        start_time: 0.0,
        frames,
    })
}

fn step(p: &SynthParams) -> f64 {
    p.speed * KEY_FRAME_DT
}

fn straight(p: &SynthParams, start: Point, vel: Point) -> Vec<Point> {
    (0..p.frames)
        .map(|k| [start[0] + k as f64 * vel[0], start[1] + k as f64 * vel[1]])
        .collect()
}

fn parallel(p: &SynthParams) -> Vec<Vec<Point>> {
    let v = [step(p), 0.0];
    vec![straight(p, [0.0, 0.0], v), straight(p, [0.0, p.spacing], v)]
}

fn merging(p: &SynthParams) -> Vec<Vec<Point>> {
    let d = step(p);
    let merge = (p.frames / 2).max(1);
    let lateral = 2.0 * p.spacing;
    let joiner = (0..p.frames)
        .map(|k| {
            let x = -p.spacing + k as f64 * d;
            let y = if k < merge {
                lateral * (1.0 - k as f64 / merge as f64)
            } else {
                0.0
            };
            [x, y]
        })
        .collect();
    vec![straight(p, [0.0, 0.0], [d, 0.0]), joiner]
}

fn following(p: &SynthParams) -> Vec<Vec<Point>> {
    let d = step(p);
    let delay = libm::ceil(p.spacing / d).max(1.0) as usize;
    let turn_at = (p.frames / 2) as isize;
    let (s, c) = libm::sincos(p.turn);
    // leader path indexed by signed frame so the follower can look back
    // before frame 0
    let leader = |k: isize| -> Point {
        if k <= turn_at {
            [k as f64 * d, 0.0]
        } else {
            let t = (k - turn_at) as f64 * d;
            [turn_at as f64 * d + t * c, t * s]
        }
    };
    let lead = (0..p.frames as isize).map(leader).collect();
    let follow = (0..p.frames as isize)
        .map(|k| leader(k - delay as isize))
        .collect();
    vec![lead, follow]
}

fn meeting(p: &SynthParams) -> Vec<Vec<Point>> {
    let d = step(p);
    let side = if p.lateral_offset < 0.0 { -1.0 } else { 1.0 };
    let lat = p.sidestep_speed * KEY_FRAME_DT;
    let mut a = [0.0, 0.0];
    let mut b = [d * (p.frames - 1) as f64, p.lateral_offset];
    let mut ta = Vec::with_capacity(p.frames);
    let mut tb = Vec::with_capacity(p.frames);
    for _ in 0..p.frames {
        ta.push(a);
        tb.push(b);
        let gap = b[0] - a[0];
        let avoiding = gap > 0.0 && gap < p.trigger_distance && (b[1] - a[1]).abs() < p.spacing;
        a[0] += d;
        b[0] -= d;
        if avoiding {
            a[1] -= side * lat;
            b[1] += side * lat;
        }
    }
    vec![ta, tb]
}

fn group_avoid(p: &SynthParams) -> Vec<Vec<Point>> {
    let d = step(p);
    let lat = p.sidestep_speed * KEY_FRAME_DT;
    let side = if p.lateral_offset < 0.0 { -1.0 } else { 1.0 };
    let half = p.spacing / 2.0;
    let obstacle = [d * (p.frames - 1) as f64 * 0.6, p.lateral_offset];
    let mut x = 0.0;
    let mut shift = 0.0;
    let mut left = Vec::with_capacity(p.frames);
    let mut right = Vec::with_capacity(p.frames);
    for _ in 0..p.frames {
        left.push([x, half + shift]);
        right.push([x, -half + shift]);
        let gap = obstacle[0] - x;
        let clearance = p.spacing;
        let near_side = if side > 0.0 {
            -half + shift
        } else {
            half + shift
        };
        if gap > 0.0 && gap < p.trigger_distance && (near_side - obstacle[1]).abs() < clearance
            || gap > 0.0
                && gap < p.trigger_distance
                && (shift - obstacle[1]).abs() < half + clearance
        {
            shift -= side * lat;
        }
        x += d;
    }
    vec![left, right, vec![obstacle; p.frames]]
}
