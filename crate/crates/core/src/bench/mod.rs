//! Built-in distributions and the experiment harness that turns them into
//! tables of rate points and simulated code distances.

mod builtins;
mod experiment;

pub use builtins::{copy3_witness, decomposition_from_joint, example2_witness, example_distributions};
pub use experiment::{
    load_distribution, median_of, rate_points, run_experiment, run_experiment_with_points, simulate_sweep, write_rows,
    ExperimentSpec, Format, ModelTag, NamedPoint, Row, SimRun, SimSummary, Source, Unit,
};

use thiserror::Error;

use crate::codesim::CodeError;
use crate::probcore::ProbError;
use crate::ratereg::RateError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown built-in distribution `{0}`")]
    UnknownId(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("writing output: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;
