//! Rate regions over auxiliary random variables.
//!
//! Wyner common information, the corner points and tradeoff frontier of the
//! collaborative region, the adversarial (secrecy formation) region and its
//! key cost, cardinality reduction of augmented distributions, and an
//! independent brute-force oracle used to cross-check the optimizer.
//!
//! Every reported rate is recomputed from an explicit witness distribution,
//! so a [`RatePoint`] is always an upper bound certified by its witness.

mod assemble;
mod dense;
mod engine;
mod frontier;
mod models;
mod oracle;
mod reduce;
mod search;

pub use frontier::{lower_envelope, Frontier};
pub use oracle::brute_force_oracle;
pub use reduce::reduce_cardinality;
pub use search::{adversarial_frontier, collab_corner_points, collab_frontier, key_cost, wyner_ci};

use std::fmt;

use thiserror::Error;

use crate::exec::Exec;
use crate::probcore::{variational_distance, Channel, JointDist, ProbError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("optimizer diverged: no restart met the constraint tolerance (best violation {best_violation:e})")]
    OptimizerDiverged { best_violation: f64 },
    #[error("cardinality reduction failed: {0}")]
    InfeasibleReduction(String),
    #[error("search budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, RateError>;

/// Which Markov structure a decomposition obeys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// `X − VU − Y` and `XY − U − Z`; rates `I(XYZ;U)`, `I(XY;V|U)`.
    Collaborative,
    /// `XY − Z − U` and `X − UV − Y`; rates `I(Z;U)`, `I(XY;V|U)`.
    Adversarial,
    /// `A − W − B`; rate `I(AB;W)`.
    Wyner2,
    /// `X, Y, Z` mutually independent given `W`; rate `I(XYZ;W)`.
    Wyner3,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Collaborative => "collaborative",
            Model::Adversarial => "adversarial",
            Model::Wyner2 => "wyner2",
            Model::Wyner3 => "wyner3",
        })
    }
}

/// Designation of the observed variable groups `X`, `Y`, `Z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roles {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub z: Vec<String>,
}

impl Roles {
    pub fn new<S: AsRef<str>>(x: &[S], y: &[S], z: &[S]) -> Self {
        let own = |v: &[S]| v.iter().map(|s| s.as_ref().to_string()).collect();
        Self {
            x: own(x),
            y: own(y),
            z: own(z),
        }
    }

    /// The first three variables of `j`, one per role.
    pub fn first_three(j: &JointDist) -> Result<Self> {
        let v = j.variables();
        if v.len() < 3 {
            return Err(RateError::InvalidInput(format!(
                "need at least three variables, found {}",
                v.len()
            )));
        }
        Ok(Self::new(&v[..1], &v[1..2], &v[2..3]))
    }

    pub(crate) fn all(&self) -> Vec<String> {
        self.x.iter().chain(&self.y).chain(&self.z).cloned().collect()
    }

    pub(crate) fn xy(&self) -> Vec<String> {
        self.x.iter().chain(&self.y).cloned().collect()
    }

    pub(crate) fn check(&self, j: &JointDist) -> Result<()> {
        if self.x.is_empty() || self.y.is_empty() || self.z.is_empty() {
            return Err(RateError::InvalidInput("every role needs at least one variable".into()));
        }
        let all = self.all();
        j.var_indices(&all)?;
        let mut seen = std::collections::HashSet::new();
        for v in &all {
            if !seen.insert(v) {
                return Err(ProbError::OverlappingGroups(v.clone()).into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Number of optimizer starts. Structured starts always run; random
    /// starts fill the remainder.
    pub restarts: usize,
    /// Function-evaluation budget per start.
    pub max_iters: usize,
    /// Initial quadratic penalty weight of the augmented Lagrangian.
    pub penalty_weight: f64,
    /// Slack used when comparing objective values (lexicographic ties).
    pub tol_objective: f64,
    /// Constraint tolerance a witness must meet during search.
    pub tol_constraint: f64,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 64,
            max_iters: 3000,
            penalty_weight: 1e4,
            tol_objective: 1e-4,
            tol_constraint: 1e-9,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(RateError::InvalidInput("restarts must be at least 1".into()));
        }
        if !(self.tol_objective > 0.0 && self.tol_constraint > 0.0 && self.penalty_weight > 0.0) {
            return Err(RateError::InvalidInput(
                "tolerances and penalty weight must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Tolerance applied when a result is handed back to the caller.
pub const FINAL_TOL: f64 = 1e-7;

/// An augmentation of an observed distribution by auxiliary variables.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxDecomposition {
    pub model: Model,
    /// The observed distribution being decomposed.
    pub base: JointDist,
    /// Observed variables plus the auxiliaries.
    pub joint: JointDist,
    /// Observed groups: `[A, B]` for Wyner2, `[X, Y, Z]` otherwise.
    pub groups: Vec<Vec<String>>,
    /// `U` (or `W` for the Wyner models).
    pub u: String,
    pub v: Option<String>,
}

impl AuxDecomposition {
    fn observed(&self) -> Vec<String> {
        self.groups.iter().flatten().cloned().collect()
    }

    fn xy(&self) -> Vec<String> {
        self.groups[0].iter().chain(&self.groups[1]).cloned().collect()
    }

    /// Number of auxiliary `U` letters carrying mass.
    pub fn u_card(&self) -> usize {
        self.joint.marginal(&[&self.u]).map(|m| m.support_size()).unwrap_or(0)
    }

    pub fn v_card(&self) -> usize {
        match &self.v {
            Some(v) => self.joint.marginal(&[v]).map(|m| m.support_size()).unwrap_or(0),
            None => 1,
        }
    }

    pub fn u_dist(&self) -> Result<JointDist> {
        Ok(self.joint.marginal(&[&self.u])?)
    }

    /// `P(xy | u, v)`; for models without `V` this is `P(xy | u)`.
    pub fn cond_xy_given_uv(&self) -> Result<Channel> {
        let mut inputs = vec![self.u.clone()];
        inputs.extend(self.v.iter().cloned());
        Ok(self.joint.conditional(&self.xy(), &inputs)?)
    }

    /// `P(z | u)` (Wyner2 has no `Z`; the second group is used).
    pub fn cond_z_given_u(&self) -> Result<Channel> {
        let z = self.groups.last().unwrap();
        Ok(self.joint.conditional(z, &[self.u.clone()])?)
    }

    /// `(R_P, R_K)` recomputed from the witness.
    pub fn rates(&self) -> Result<(f64, f64)> {
        let j = &self.joint;
        let u = [self.u.clone()];
        let rk = match &self.v {
            Some(v) => j.conditional_mutual_information(&self.xy(), &[v.clone()], &u)?,
            None => 0.0,
        };
        let rp = match self.model {
            Model::Adversarial => j.mutual_information(&self.groups[2], &u)?,
            _ => j.mutual_information(&self.observed(), &u)?,
        };
        Ok((rp, rk))
    }

    /// The model's Markov conditions as `(description, conditional mutual
    /// information)` pairs; each should vanish.
    pub fn markov_residuals(&self) -> Result<Vec<(String, f64)>> {
        let j = &self.joint;
        let g = &self.groups;
        let u = vec![self.u.clone()];
        let mut uv = u.clone();
        uv.extend(self.v.iter().cloned());
        let mut out = Vec::new();
        let name = |s: &[String]| s.join("");
        match self.model {
            Model::Wyner2 => {
                out.push((
                    format!("{}-{}-{}", name(&g[0]), self.u, name(&g[1])),
                    j.conditional_mutual_information(&g[0], &g[1], &u)?,
                ));
            }
            Model::Wyner3 => {
                out.push((
                    format!("{}-{}-{}", name(&g[0]), self.u, name(&g[1])),
                    j.conditional_mutual_information(&g[0], &g[1], &u)?,
                ));
                out.push((
                    format!("{}-{}-{}", name(&self.xy()), self.u, name(&g[2])),
                    j.conditional_mutual_information(&self.xy(), &g[2], &u)?,
                ));
            }
            Model::Collaborative => {
                out.push((
                    format!("{}-{}-{}", name(&g[0]), name(&uv), name(&g[1])),
                    j.conditional_mutual_information(&g[0], &g[1], &uv)?,
                ));
                out.push((
                    format!("{}-{}-{}", name(&self.xy()), self.u, name(&g[2])),
                    j.conditional_mutual_information(&self.xy(), &g[2], &u)?,
                ));
            }
            Model::Adversarial => {
                out.push((
                    format!("{}-{}-{}", name(&self.xy()), name(&g[2]), self.u),
                    j.conditional_mutual_information(&self.xy(), &u, &g[2])?,
                ));
                out.push((
                    format!("{}-{}-{}", name(&g[0]), name(&uv), name(&g[1])),
                    j.conditional_mutual_information(&g[0], &g[1], &uv)?,
                ));
            }
        }
        Ok(out)
    }

    /// L1 distance between the witness's observed marginal and the base.
    pub fn marginal_error(&self) -> Result<f64> {
        let m = self.joint.marginal(self.base.variables())?;
        Ok(variational_distance(&m, &self.base)?)
    }

    /// Largest constraint violation: marginal mismatch or Markov residual.
    pub fn violation(&self) -> Result<f64> {
        let mut worst = self.marginal_error()?;
        for (_, r) in self.markov_residuals()? {
            worst = worst.max(r);
        }
        Ok(worst)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let v = self.violation()?;
        if v > tol {
            return Err(RateError::OptimizerDiverged { best_violation: v });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    Alpha,
    Beta,
    Interior,
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Corner::Alpha => "alpha",
            Corner::Beta => "beta",
            Corner::Interior => "interior",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub rp: f64,
    pub rk: f64,
    pub witness: AuxDecomposition,
    pub label: Option<Corner>,
}

impl RatePoint {
    pub(crate) fn from_witness(witness: AuxDecomposition, label: Option<Corner>) -> Result<Self> {
        let (rp, rk) = witness.rates()?;
        Ok(Self { rp, rk, witness, label })
    }

    /// `R_P + λ R_K`.
    pub fn scalarized(&self, lambda: f64) -> f64 {
        self.rp + lambda * self.rk
    }
}
