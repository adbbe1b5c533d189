use core::fmt;
use core::str::FromStr;

use alloc::string::String;

use serde::{Deserialize, Serialize};

/// How neighbor attention logits are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttentionStrategy {
    /// No social context: `H_i` is always zero.
    #[serde(rename = "none")]
    None,
    /// Soft attention from the two motion states `[h_i; h_j]`.
    #[serde(rename = "sa")]
    Soft,
    /// Attention from an embedded relative position and both motion states.
    #[serde(rename = "ra")]
    Relative,
    /// Social relationship attention from `[r_ij; h_i; h_j]`.
    #[serde(rename = "sra")]
    SocialRelationship,
}

impl AttentionStrategy {
    pub const ALL: [AttentionStrategy; 4] = [
        AttentionStrategy::None,
        AttentionStrategy::Soft,
        AttentionStrategy::Relative,
        AttentionStrategy::SocialRelationship,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttentionStrategy::None => "none",
            AttentionStrategy::Soft => "sa",
            AttentionStrategy::Relative => "ra",
            AttentionStrategy::SocialRelationship => "sra",
        }
    }

    /// Whether the pairwise relationship LSTM runs under this strategy.
    pub fn uses_relationship(self) -> bool {
        self == AttentionStrategy::SocialRelationship
    }
}

impl fmt::Display for AttentionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttentionStrategy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "non" => Ok(AttentionStrategy::None),
            "sa" => Ok(AttentionStrategy::Soft),
            "ra" => Ok(AttentionStrategy::Relative),
            "sra" => Ok(AttentionStrategy::SocialRelationship),
            _ => Err(ConfigError::UnknownStrategy(s.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("{field} must be positive")]
    NotPositive { field: &'static str },
    #[error("unknown attention strategy `{0}` (expected none, sa, ra or sra)")]
    UnknownStrategy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub strategy: AttentionStrategy,
    pub obs_len: usize,
    pub pred_len: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            hidden_dim: 64,
            strategy: AttentionStrategy::SocialRelationship,
            obs_len: 8,
            pred_len: 12,
        }
    }
}

impl ModelConfig {
    pub fn with_strategy(strategy: AttentionStrategy) -> Self {
        Self {
            strategy,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (field, v) in [
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("obs_len", self.obs_len),
            ("pred_len", self.pred_len),
        ] {
            if v == 0 {
                return Err(ConfigError::NotPositive { field });
            }
        }
        Ok(())
    }

    pub fn window_len(&self) -> usize {
        self.obs_len + self.pred_len
    }
}
