//! Inference: deterministic forward chaining, the sampler, the depth-bounded
//! lookahead, the estimator and an exact enumeration oracle.

mod chase;
mod estimator;
mod interp;
mod lookahead;
mod oracle;
mod rules;
mod sampler;

use indexmap::IndexMap;
use rustc_hash::{FxBuildHasher, FxHashMap};
use thiserror::Error;

use crate::distributions::DistError;
use crate::term::{Atom, Term};

pub use estimator::{evaluate, Estimate, Evaluation, EstimatorState, Inference, Posterior, WeightedSample};
pub use interp::Interpretation;
pub use oracle::{exact_enumerate, OracleOptions, OracleResult};
pub use sampler::Prune;


/// `T_pf`: truth values of the probabilistic facts evaluated in a sample.
pub type FactTable = FxHashMap<Atom, bool>;

/// `T_dis`: sampled values of random variables, in sampling order.
pub type ValueTable = IndexMap<Term, Term, FxBuildHasher>;

/// Default limit on the number of atoms derived in one run.
pub const DEFAULT_MAX_DERIVED: usize = 1_000_000;

/// Environment variable overriding [`DEFAULT_MAX_DERIVED`].
pub const MAX_DERIVED_ENV: &str = "DCLP_MAX_DERIVED";

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("random variable `{rv}` has two distributions, `{first}` and `{second}`")]
    ConflictingDistributions { rv: Term, first: Term, second: Term },
    #[error("more than {0} atoms derived; raise the limit with DCLP_MAX_DERIVED")]
    DerivationCap(usize),
    #[error(transparent)]
    Distribution(#[from] DistError),
    #[error("evidence `{0}` fixes the value of a continuous random variable")]
    ContinuousEvidence(Atom),
    #[error("random variable `{rv}` has distribution `{dist}`, which cannot be enumerated")]
    NotFinite { rv: Term, dist: Term },
    #[error("more than {0} worlds to enumerate")]
    WorldCap(u64),
    #[error("`{0}` is not ground")]
    NonGround(Atom),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Sample from the prior; weights are 0 or 1.
    Rejection,
    /// Steer finite choices away from the evidence and weight accordingly.
    LikelihoodWeighting,
}

impl Mode {
    /// Name used on the command line and in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Mode::Rejection => "rejection",
            Mode::LikelihoodWeighting => "lw",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "rejection" => Ok(Mode::Rejection),
            "lw" | "likelihood-weighting" => Ok(Mode::LikelihoodWeighting),
            _ => Err(format!("unknown method `{s}`; expected rejection or lw")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Convergence {
    /// Draw exactly `max_samples` samples.
    Fixed,
    /// Stop once the standard error drops below the threshold, or at
    /// `max_samples`.
    StderrBelow(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub mode: Mode,
    /// Lookahead depth; 0 disables it.
    pub depth: u32,
    pub max_samples: u64,
    pub seed: u64,
    pub convergence: Convergence,
    /// Worker threads; 1 runs sequentially.
    pub workers: usize,
    pub max_derived: usize,
    /// Random variables whose posterior is reported.
    pub track: Vec<Term>,
}

impl Default for SamplerConfig {
    fn default() -> SamplerConfig {
        SamplerConfig {
            mode: Mode::LikelihoodWeighting,
            depth: 0,
            max_samples: 1000,
            seed: 0,
            convergence: Convergence::Fixed,
            workers: 1,
            max_derived: max_derived_from_env(),
            track: Vec::new(),
        }
    }
}

/// The derivation cap from `DCLP_MAX_DERIVED`, or the default.
pub fn max_derived_from_env() -> usize {
    std::env::var(MAX_DERIVED_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_MAX_DERIVED)
}

/// Least fixpoint of the immediate consequence operator of `p` above
/// `facts`. Distributional clauses derive their `h ~ D` atoms; probabilistic
/// facts over outcomes never hold, since nothing is sampled.
pub fn tp_fixpoint(p: &crate::Program, facts: &[Atom], max_derived: usize) -> Result<Interpretation, EngineError> {
    let rules = rules::RuleSet::from_program(p);
    let negative = Default::default();
    let mut chase = chase::Chase::new(&rules, &negative, false, max_derived);
    for f in facts {
        chase.add_fact(f);
    }
    chase.run(&mut chase::StaticEval)?;
    Ok(chase.interp)
}
