use thiserror::Error;

use crate::prob::Axis;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value {value} at row {row}, dimension {dim}")]
    NonFinite { row: usize, dim: usize, value: f64 },

    #[error("row {row} has {found} dimensions, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },

    #[error("invalid discretizer: {0}")]
    InvalidDiscretizer(String),

    #[error("columns have mismatched lengths: {0:?}")]
    LengthMismatch(Vec<usize>),

    #[error("joint table is empty")]
    EmptyTable,

    #[error("axis {0:?} appears more than once")]
    DuplicateAxis(Axis),

    #[error("axis {0:?} is not present in the table")]
    MissingAxis(Axis),

    #[error("axis sets overlap on {0:?}")]
    OverlappingAxes(Axis),

    #[error("axis set is empty")]
    EmptyAxes,

    #[error("invalid mass {mass} in cell {cell:?}")]
    InvalidMass { cell: Vec<u32>, mass: f64 },

    #[error("{quantity} evaluated to {value} bits, below the clamping tolerance")]
    NegativeInformation { quantity: &'static str, value: f64 },

    #[error("isometric point is inconsistent: I(X;f(X)) would be {0} bits")]
    InconsistentPoint(f64),

    #[error("invalid objective parameter: {0}")]
    InvalidParameter(String),

    #[error("candidate list is empty")]
    NoCandidates,

    #[error("candidate {name} is not deterministic (H(f(X)|X) = {n_xxf} bits)")]
    NotDeterministic { name: String, n_xxf: f64 },

    #[error("candidates do not share a target: H(Y) ranges over [{min}, {max}] bits")]
    MixedTargets { min: f64, max: f64 },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("pattern {pattern} is not achievable on this joint: {reason}")]
    PatternUnachievable { pattern: String, reason: String },

    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),

    #[error("input width {found} does not match the network input width {expected}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}
