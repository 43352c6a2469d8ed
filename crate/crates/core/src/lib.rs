//! Public/private correlation costs of tripartite distributions.
//!
//! * [`probcore`]: exact finite distributions, information measures and
//!   typical sets.
//! * [`ratereg`]: Wyner common information, the collaborative and
//!   adversarial rate regions, cardinality reduction, a brute-force oracle.
//! * [`codesim`]: finite-blocklength soft-covering and synthesis codes with
//!   their exact or Monte Carlo variational distance.
//! * [`bench`]: built-in distributions and the experiment harness.
//! * [`cli`]: the `tricorr` command line.

pub mod bench;
pub mod cli;
pub mod codesim;
pub mod exec;
pub mod probcore;
pub mod ratereg;

pub use exec::Exec;
pub use probcore::{make_joint, Channel, JointDist, ProbError, ProductHandle, TypicalSet};
