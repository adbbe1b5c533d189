//! Run configuration: one TOML file plus command-line overrides.
//!
//! ```toml
//! out_dir = "runs/hotel"
//!
//! [model]
//! embed_dim = 32
//! hidden_dim = 64
//! strategy = "sra"
//!
//! [train]
//! learning_rate = 0.001
//! epochs = 300
//! seed = 7
//!
//! [data]
//! held_out = "ETH-hotel"
//! frame_dt = 0.04
//! [data.scenes]
//! "ETH-univ" = "data/eth/univ.txt"
//! "ETH-hotel" = "data/eth/hotel.txt"
//!
//! [[data.synthetic]]
//! name = "meet-1"
//! kind = "meeting"
//! seed = 1
//! params = { lateral_offset = -0.3 }
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sra_core::data::{ScenarioKind, SynthParams};
use sra_core::model::{AttentionStrategy, ModelConfig};
use sra_core::pipeline::TrainConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("reading config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub clip_norm: f64,
    pub augment: bool,
    /// Write a checkpoint every this many epochs; 0 saves only at the end.
    pub save_every: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            seed: t.seed,
            clip_norm: t.clip_norm,
            augment: t.augment,
            save_every: 0,
        }
    }
}

impl TrainSection {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            seed: self.seed,
            clip_norm: self.clip_norm,
            augment: self.augment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticScene {
    pub name: String,
    pub kind: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: SynthParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub held_out: String,
    pub stride: usize,
    /// Seconds between consecutive frame ids in the annotation files.
    pub frame_dt: f64,
    /// Scene name to annotation file.
    pub scenes: BTreeMap<String, PathBuf>,
    pub synthetic: Vec<SyntheticScene>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            held_out: "ETH-hotel".into(),
            stride: 1,
            frame_dt: 0.4,
            scenes: BTreeMap::new(),
            synthetic: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainSection,
    pub data: DataConfig,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainSection::default(),
            data: DataConfig::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub held_out: Option<String>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub strategy: Option<AttentionStrategy>,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, toml::de::Error> {
        let mut config: RunConfig = toml::from_str(text)?;
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigFileError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigFileError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|source| ConfigFileError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in self.data.scenes.values_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if self.out_dir.is_relative() {
            self.out_dir = base.join(&self.out_dir);
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(h) = &o.held_out {
            self.data.held_out = h.clone();
        }
        if let Some(s) = o.seed {
            self.train.seed = s;
        }
        if let Some(e) = o.epochs {
            self.train.epochs = e;
        }
        if let Some(s) = o.strategy {
            self.model.strategy = s;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
    }

    pub fn validate(&self) -> Result<(), ConfigFileError> {
        let invalid = |m: String| Err(ConfigFileError::Invalid(m));
        if let Err(e) = self.model.validate() {
            return invalid(e.to_string());
        }
        if !(self.train.learning_rate >= 0.0 && self.train.learning_rate.is_finite()) {
            return invalid("train.learning_rate must be finite and nonnegative".into());
        }
        if self.train.clip_norm.is_nan() || self.train.clip_norm <= 0.0 {
            return invalid("train.clip_norm must be positive".into());
        }
        if !(self.data.frame_dt > 0.0 && self.data.frame_dt.is_finite()) {
            return invalid("data.frame_dt must be positive".into());
        }
        if self.data.stride == 0 {
            return invalid("data.stride must be positive".into());
        }
        for s in &self.data.synthetic {
            if self.data.scenes.contains_key(&s.name) {
                return invalid(format!("scene `{}` is defined twice", s.name));
            }
        }
        Ok(())
    }
}
