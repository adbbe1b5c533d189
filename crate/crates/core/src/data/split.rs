use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{build_windows, DataError, Scene, TrajectoryWindow};

/// The five benchmark scenes in their conventional order.
pub const SCENE_NAMES: [&str; 5] = [
    "ETH-univ",
    "ETH-hotel",
    "UCY-zara01",
    "UCY-zara02",
    "UCY-univ",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train_scenes: Vec<String>,
    pub train: Vec<TrajectoryWindow>,
    pub test: Vec<TrajectoryWindow>,
}

/// Windows from every scene except `held_out` go to training, the held-out
/// scene's windows to test. Scene names must be distinct.
pub fn leave_one_out(
    scenes: &[Scene],
    held_out: &str,
    obs_len: usize,
    pred_len: usize,
    stride: usize,
) -> Result<Split, DataError> {
    if !scenes.iter().any(|s| s.name == held_out) {
        return Err(DataError::UnknownScene(held_out.to_string()));
    }
    let mut split = Split {
        train_scenes: Vec::new(),
        train: Vec::new(),
        test: Vec::new(),
    };
    for scene in scenes {
        let windows = build_windows(scene, obs_len, pred_len, stride);
        if scene.name == held_out {
            split.test.extend(windows);
        } else {
            split.train_scenes.push(scene.name.clone());
            split.train.extend(windows);
        }
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;
    use alloc::collections::BTreeSet;

    fn benchmark() -> Vec<Scene> {
        SCENE_NAMES
            .iter()
            .enumerate()
            .map(|(s, name)| Scene {
                name: name.to_string(),
                dt: 0.4,
                start_time: 0.0,
                frames: (0..22 + s)
                    .map(|k| BTreeMap::from([(1, [k as f64, s as f64])]))
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn held_out_hotel() {
        let scenes = benchmark();
        let split = leave_one_out(&scenes, "ETH-hotel", 8, 12, 1).unwrap();
        assert_eq!(split.train_scenes.len(), 4);
        let mut all: BTreeSet<&str> = split.train_scenes.iter().map(String::as_str).collect();
        all.insert("ETH-hotel");
        assert_eq!(all, SCENE_NAMES.into_iter().collect());
        assert!(split.test.iter().all(|w| w.scene == "ETH-hotel"));
        assert!(split.train.iter().all(|w| w.scene != "ETH-hotel"));
        assert_eq!(split.test.len(), 4);
        assert_eq!(split.train.len(), 3 + 5 + 6 + 7);
    }

    #[test]
    fn disjoint() {
        let scenes = benchmark();
        for name in SCENE_NAMES {
            let split = leave_one_out(&scenes, name, 8, 12, 1).unwrap();
            let key = |w: &TrajectoryWindow| (w.scene.clone(), w.start_frame);
            let train: BTreeSet<_> = split.train.iter().map(key).collect();
            assert!(split.test.iter().all(|w| !train.contains(&key(w))));
        }
    }

    #[test]
    fn unknown_scene() {
        assert_eq!(
            leave_one_out(&benchmark(), "ETH-lobby", 8, 12, 1),
            Err(DataError::UnknownScene("ETH-lobby".into()))
        );
    }
}
