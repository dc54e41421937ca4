use thiserror::Error;

/// Errors for malformed problems. Numerical outcomes of a solve are
/// reported through [`crate::SdpStatus`] instead.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("problem has no blocks")]
    NoBlocks,
    #[error("block {block} has dimension zero")]
    EmptyBlock { block: usize },
    #[error("block {block} does not exist (problem has {blocks} blocks)")]
    NoSuchBlock { block: usize, blocks: usize },
    #[error("block {block} expects a {expected}x{expected} matrix, got dimension {got}")]
    Shape {
        block: usize,
        expected: usize,
        got: usize,
    },
    #[error("index {index} out of range for block {block} of dimension {dim}")]
    OutOfRange {
        block: usize,
        index: usize,
        dim: usize,
    },
    #[error("{what} is not symmetric (max asymmetry {asym:e})")]
    NotSymmetric { what: &'static str, asym: f64 },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("constraint lists block {block} twice")]
    DuplicateBlock { block: usize },
    #[error("constraint {index} has an all-zero matrix")]
    ZeroConstraint { index: usize },
    #[error("problem has no constraints")]
    NoConstraints,
    #[error("constraint matrices are linearly dependent (detected at constraint {index})")]
    DependentConstraints { index: usize },
}
