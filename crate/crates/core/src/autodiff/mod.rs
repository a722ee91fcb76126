//! Reverse-mode differentiation over dense `f64` matrices, and Adam.

mod adam;
mod array;
mod check;
mod graph;

use thiserror::Error;

pub use adam::{Adam, AdamConfig};
pub use array::Array2;
pub use check::{finite_diff_check, finite_diff_check_masked, relative_error};
pub use graph::{log_sigmoid, sigmoid, Gradients, Graph, Trainable, Var};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("{op}: shape mismatch {}×{} vs {}×{}", .left.0, .left.1, .right.0, .right.1)]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("backward requires a 1×1 loss, got {}×{}", .shape.0, .shape.1)]
    NonScalarLoss { shape: (usize, usize) },
    #[error("non-finite value produced by {op} during the {pass} pass")]
    NonFinite { op: &'static str, pass: &'static str },
    #[error("{op}: index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("{op}: empty input")]
    Empty { op: &'static str },
    #[error("no gradient for parameter {name}")]
    MissingGradient { name: String },
    #[error("{len} values cannot fill a {rows}×{cols} array")]
    BadData { rows: usize, cols: usize, len: usize },
}

impl AutodiffError {
    pub(crate) fn shape(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        AutodiffError::ShapeMismatch { op, left, right }
    }
}

#[cfg(test)]
mod tests;
