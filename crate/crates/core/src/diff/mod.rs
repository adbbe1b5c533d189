//! Reverse-mode differentiation over dense `f64` tensors, plus Adam.

mod adam;
mod tape;
mod tensor;

use alloc::string::String;
use alloc::vec::Vec;

pub use adam::{clip_grad_norm, Adam, AdamConfig, Parameters};
pub use tape::{Binary, Tape, Unary, Var};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("shape {shape:?} does not describe {len} values")]
    InvalidShape { shape: Vec<usize>, len: usize },
    #[error("{op} produced a non-finite value")]
    NonFinite { op: &'static str },
    #[error("empty neighbor set: softmax row {row} has no unmasked entry")]
    EmptyNeighborSet { row: usize },
    #[error("backward root must be a scalar, got shape {shape:?}")]
    NonScalarRoot { shape: Vec<usize> },
    #[error("parameter `{name}` has no gradient")]
    MissingGradient { name: String },
    #[error("{op} needs at least one input")]
    EmptyInput { op: &'static str },
    #[error("axis {axis} out of range for rank {rank}")]
    BadAxis { axis: usize, rank: usize },
    #[error("index {index} out of bounds for extent {len}")]
    IndexOutOfBounds { index: usize, len: usize },
}
