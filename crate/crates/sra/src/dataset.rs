//! Annotation files and scene assembly for a run.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sra_core::data::{parse_annotations, regrid, synth_scenario, DataError, Scene};

use crate::config::DataConfig;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: DataError },
    #[error("synthetic scene `{name}`: {source}")]
    Synthetic { name: String, source: DataError },
    #[error("no scenes configured")]
    NoScenes,
}

/// A scene and how many pedestrians were dropped while regridding it.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScene {
    pub scene: Scene,
    pub dropped: usize,
}

pub fn load_scene(path: &Path, name: &str, frame_dt: f64) -> Result<LoadedScene, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |source| DatasetError::Parse {
        path: path.to_path_buf(),
        source,
    };
    let annotations = parse_annotations(&text).map_err(parse_err)?;
    let r = regrid(&annotations, frame_dt, name).map_err(parse_err)?;
    Ok(LoadedScene {
        scene: r.scene,
        dropped: r.dropped,
    })
}

/// Every configured scene: files in name order, then synthetic scenes in
/// listed order.
pub fn load_scenes(data: &DataConfig) -> Result<Vec<LoadedScene>, DatasetError> {
    let mut out = Vec::new();
    for (name, path) in &data.scenes {
        out.push(load_scene(path, name, data.frame_dt)?);
    }
    for s in &data.synthetic {
        let mut scene = synth_scenario(s.kind, &s.params, s.seed).map_err(|source| {
            DatasetError::Synthetic {
                name: s.name.clone(),
                source,
            }
        })?;
        scene.name = s.name.clone();
        out.push(LoadedScene { scene, dropped: 0 });
    }
    if out.is_empty() {
        return Err(DatasetError::NoScenes);
    }
    Ok(out)
}

/// Annotation text for `scene`: one `frame ped x y` line per position,
/// frames numbered from 0 on the 0.4 s grid.
pub fn format_annotations(scene: &Scene) -> String {
    let mut out = String::from("# frame_id ped_id x y\n");
    for a in scene.to_annotations() {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", a.frame_id, a.ped_id, a.x, a.y));
    }
    out
}
