//! Exact finite-probability engine.
//!
//! Everything here works on small discrete alphabets and computes quantities
//! exactly (up to floating point). Information measures are in nats.

mod channel;
mod format;
mod joint;
mod measures;
mod product;
mod typical;

pub use channel::Channel;
pub use format::{DistFile, MassEntry};
pub use joint::{make_joint, JointDist};
pub use measures::{entropy_of, l1_sparse, variational_distance};
pub use product::ProductHandle;
pub use typical::{Composition, TypicalSet};

use thiserror::Error;

/// Absolute tolerance on total mass of a distribution.
pub const NORM_TOL: f64 = 1e-12;
/// Entries below this are dropped at construction.
pub const PRUNE_BELOW: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error("distribution is not normalized (total mass {sum})")]
    NotNormalized { sum: f64 },
    #[error("negative probability {p}")]
    NegativeMass { p: f64 },
    #[error("point has arity {got}, expected {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` appears in more than one group")]
    OverlappingGroups(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("label index {index} out of range for variable `{var}`")]
    LabelOutOfRange { var: String, index: usize },
    #[error("unknown label `{label}` for variable `{var}`")]
    UnknownLabel { var: String, label: String },
    #[error("distributions are defined over different alphabets")]
    AlphabetMismatch,
    #[error("channel row {row} sums to {sum}")]
    ChannelRow { row: String, sum: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed distribution file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, ProbError>;
