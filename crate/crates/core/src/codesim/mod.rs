//! Finite-blocklength achievability codes.
//!
//! Random soft-covering codebooks drawn from typical sets, the two-layer
//! split-source synthesis code (a public codebook over `U` plus per-letter
//! private codebooks over `V`, pasted positionally), and the secrecy
//! formation code with the eavesdropper's simulation channel. Each code can
//! be scored by its variational distance to the i.i.d. target, computed by
//! exact enumeration when small and by Monte Carlo otherwise.

mod adversarial;
mod codebook;
mod eval;
mod split;

pub use adversarial::{build_adversarial_code, evaluate_adversarial, AdversarialCode, AdversarialEval};
pub use codebook::{mixture_eval, soft_cover_codebook, Codebook, MixtureHandle};
pub use split::{build_split_source_code, evaluate_synthesis, SynthesisCode};

use thiserror::Error;

use crate::exec::Exec;
use crate::probcore::ProbError;
use crate::ratereg::RateError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error("the typical set is empty (n = {n}, delta = {delta})")]
    EmptyTypicalSet { n: usize, delta: f64 },
    #[error("block for letter `{letter}` is too short ({detail})")]
    BlockTooShort { letter: String, detail: String },
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, CodeError>;

/// Largest number of codewords a book may hold.
pub const MAX_WORDS: u64 = 4_000_000;

/// `max(0.05, n^(-1/3))`.
pub fn default_delta(n: usize) -> f64 {
    (n as f64).powf(-1.0 / 3.0).max(0.05)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// Largest number of output sequences enumerated exactly.
    pub budget: u64,
    pub mc_samples: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            budget: 10_000_000,
            mc_samples: 20_000,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    MonteCarlo,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "mc",
        })
    }
}

/// A variational distance, exact or estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub l1: f64,
    pub method: Method,
    /// Standard error of a Monte Carlo estimate.
    pub stderr: Option<f64>,
}
