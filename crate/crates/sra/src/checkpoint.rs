//! Self-describing checkpoint files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic "SRACKPT\0"
//! 8       4     format version (u32)
//! 12      8     header length H (u64)
//! 20      H     header, UTF-8 JSON
//! 20+H    8·P   payload: f64 values
//! end-32  32    SHA-256 of every preceding byte
//! ```
//!
//! The header lists tensors in payload order as `{name, shape}`. The
//! payload holds every tensor's values, then, if the header carries an
//! optimizer entry, the Adam first moments and second moments in the same
//! tensor order.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sra_core::diff::{Adam, AdamConfig, Parameters, Tensor};
use sra_core::model::{ModelConfig, ModelParams, ParamsError};

use crate::write_atomic;

pub const MAGIC: [u8; 8] = *b"SRACKPT\0";
pub const FORMAT_VERSION: u32 = 1;
const PREFIX: usize = 20;
const DIGEST: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint {0} does not exist")]
    Missing(PathBuf),
    #[error("reading or writing checkpoint {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint format version {found}, this build reads version {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error(transparent)]
    Params(#[from] ParamsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    epoch: usize,
    seed: u64,
    loss_history: Vec<f64>,
    tensors: Vec<TensorEntry>,
    optimizer: Option<OptimizerState>,
}

/// Model parameters plus training metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub epoch: usize,
    pub seed: u64,
    pub loss_history: Vec<f64>,
    pub adam: Option<Adam>,
}

impl Checkpoint {
    pub fn new(params: ModelParams, seed: u64) -> Self {
        Self {
            params,
            epoch: 0,
            seed,
            loss_history: Vec::new(),
            adam: None,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut tensors = Vec::new();
        let mut payload = Vec::new();
        self.params.visit(&mut |name, t| {
            tensors.push(TensorEntry {
                name: name.to_string(),
                shape: t.shape().to_vec(),
            });
            payload.extend(t.values().iter().flat_map(|v| v.to_le_bytes()));
        });
        let optimizer = self.adam.as_ref().map(|adam| {
            for set in [adam.first_moments(), adam.second_moments()] {
                for (k, entry) in tensors.iter().enumerate() {
                    // moments are allocated lazily on the first step
                    let n: usize = entry.shape.iter().product();
                    match set.get(k) {
                        Some(m) => payload.extend(m.iter().flat_map(|v| v.to_le_bytes())),
                        None => payload.extend(std::iter::repeat_n(0u8, 8 * n)),
                    }
                }
            }
            OptimizerState {
                learning_rate: adam.config.learning_rate,
                beta1: adam.config.beta1,
                beta2: adam.config.beta2,
                epsilon: adam.config.epsilon,
                step: adam.step_count(),
            }
        });
        let header = Header {
            model: *self.params.config(),
            epoch: self.epoch,
            seed: self.seed,
            loss_history: self.loss_history.clone(),
            tensors,
            optimizer,
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(PREFIX + json.len() + payload.len() + DIGEST);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&payload);
        let digest = Sha256::digest(&out);
        out.extend_from_slice(digest.as_slice());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let corrupt = |m: &str| CheckpointError::Corrupt(m.to_string());
        if bytes.len() < PREFIX + DIGEST || bytes[..8] != MAGIC {
            return Err(corrupt("not a checkpoint file"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(CheckpointError::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST);
        if Sha256::digest(body).as_slice() != digest {
            return Err(corrupt("checksum mismatch (truncated or modified file)"));
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let header_end = usize::try_from(header_len)
            .ok()
            .and_then(|h| h.checked_add(PREFIX))
            .filter(|&end| end <= body.len())
            .ok_or_else(|| corrupt("header length exceeds file"))?;
        let header: Header = serde_json::from_slice(&body[PREFIX..header_end])
            .map_err(|e| CheckpointError::Corrupt(format!("header: {e}")))?;
        let payload = &body[header_end..];
        if payload.len() % 8 != 0 {
            return Err(corrupt("payload is not a whole number of f64 values"));
        }
        let mut values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));

        let sizes: Vec<usize> = header
            .tensors
            .iter()
            .map(|t| t.shape.iter().product())
            .collect();
        let per_set: usize = sizes.iter().sum();
        let sets = if header.optimizer.is_some() { 3 } else { 1 };
        if payload.len() / 8 != per_set * sets {
            return Err(corrupt("payload length does not match the tensor table"));
        }
        let mut take = |n: usize| -> Vec<f64> { values.by_ref().take(n).collect() };
        let mut tensors = Vec::with_capacity(sizes.len());
        for (entry, &n) in header.tensors.iter().zip(&sizes) {
            let t = Tensor::new(entry.shape.clone(), take(n))
                .map_err(|e| CheckpointError::Corrupt(format!("tensor {}: {e}", entry.name)))?;
            tensors.push((entry.name.as_str(), t));
        }
        let params = ModelParams::from_named(header.model, tensors.iter().map(|(n, t)| (*n, t)))?;
        let adam = header.optimizer.map(|o| {
            let first = sizes.iter().map(|&n| take(n)).collect();
            let second = sizes.iter().map(|&n| take(n)).collect();
            let config = AdamConfig {
                learning_rate: o.learning_rate,
                beta1: o.beta1,
                beta2: o.beta2,
                epsilon: o.epsilon,
            };
            Adam::from_parts(config, o.step, first, second)
        });
        Ok(Self {
            params,
            epoch: header.epoch,
            seed: header.seed,
            loss_history: header.loss_history,
            adam,
        })
    }

    /// Parameters re-validated against the shapes `config` expects. Fails
    /// with a shape mismatch naming the first incompatible tensor.
    pub fn params_for(&self, config: ModelConfig) -> Result<ModelParams, CheckpointError> {
        let mut tensors = Vec::new();
        self.params
            .visit(&mut |name, t| tensors.push((name.to_string(), t.clone())));
        Ok(ModelParams::from_named(
            config,
            tensors.iter().map(|(n, t)| (n.as_str(), t)),
        )?)
    }
}

/// Writes `checkpoint` to `path` through a temporary file and a rename.
pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<(), CheckpointError> {
    write_atomic(path, &checkpoint.to_bytes()).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes = fs::read(path).map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            CheckpointError::Missing(path.to_path_buf())
        } else {
            CheckpointError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    Checkpoint::from_bytes(&bytes)
}
