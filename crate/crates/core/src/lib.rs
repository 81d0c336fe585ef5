//! Information-matrix analysis of transformations between a discrete source
//! `X` and target `Y`.
//!
//! The crate computes plug-in entropies over discrete joints ([`prob`]),
//! assembles the 2x2 information matrix with its constraints, noise-loss
//! coordinates and pattern labels ([`info_matrix`]), scores candidate
//! transformations under noise/loss and bottleneck objectives
//! ([`objectives`]), generates channels with exact ground truth
//! ([`channels`]), and measures the layer-by-layer chain of a small
//! multilayer perceptron ([`mlp`]).
//!
//! All quantities are in bits.

pub mod channels;
pub mod error;
pub mod info_matrix;
pub mod linalg;
pub mod mlp;
pub mod objectives;
pub mod prob;

pub use channels::{
    exact_joint, make_pattern_channel, make_toy_scenario, noise_bound_check, sample_channel, Channel,
    DeterministicChannel, NoiseBoundReport, Samples, Scenario, StochasticChannel, ToyFamily,
};
pub use error::{Error, Result};
pub use info_matrix::{
    analyze_joint, analyze_quantities, classify_pattern, information_matrix, ixx_from_point, noise_loss_point,
    quantities_from_joint, verify_constraints, Analysis, ConstraintCheck, ConstraintReport, InfoQuantities,
    InformationMatrix, Mode, NoiseLossPoint, PatternKind, PatternLabel, IDENTITY_TOLERANCE,
};
pub use linalg::Matrix;
pub use mlp::{ChainConfig, Dataset, LayerChainReport, MlpConfig, MlpModel, SnapshotChain, TrainOutcome};
pub use objectives::{
    equivalence_check, objective_value, raw_vs_reformulated_check, select, Candidate, ObjectiveSpec, SelectionResult,
};
pub use prob::{
    conditional_entropy, entropy, joint_from_samples, mutual_information, Axis, BinStrategy, Discretizer, JointTable,
    Symbol,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
