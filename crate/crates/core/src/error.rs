use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::regimen::Regimen;

/// A probability argument left the open interval / open simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("outcome probabilities must lie strictly inside the simplex")]
    OutsideSimplex,
    #[error("toxicity and efficacy rates must lie strictly inside (0, 1)")]
    BoundaryRate,
    #[error("Dirichlet shape parameters must be positive")]
    NonPositiveShape,
    #[error("Beta prior requires 0 < nu < beta")]
    InvalidPrior,
    #[error("event count exceeds trial count")]
    EventsExceedTrials,
}

/// Every invariant a trial configuration violates.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid trial configuration: {}", .0.join("; "))]
pub struct ConfigError(pub Vec<String>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("trial has terminated")]
    Terminated,
    #[error("all {0} patients have been enrolled")]
    Exhausted(u32),
    #[error("trial is still in progress")]
    InProgress,
    #[error("toxicity outcomes for cohort {0} have not been recorded")]
    AwaitingToxicity(usize),
    #[error("cohort {0} does not exist")]
    UnknownCohort(usize),
    #[error("toxicity outcomes for cohort {0} were already recorded")]
    DuplicateToxicity(usize),
    #[error("cohort {cohort} has {expected} patients, got {got} outcomes")]
    OutcomeCount { cohort: usize, expected: usize, got: usize },
    #[error("patient {patient} of cohort {cohort} has no pending efficacy outcome")]
    UnknownPatient { cohort: usize, patient: usize },
    #[error("{0} is out of range for this trial")]
    RegimenOutOfRange(Regimen),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("alpha_t has {tox} entries but alpha_e has {eff}")]
    LengthMismatch { tox: usize, eff: usize },
    #[error("scenario has {got} regimens but the trial has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{0} must lie in [0, 1]")]
    Probability(&'static str),
    #[error("correlation must lie in [-1, 1]")]
    Correlation,
    #[error("invalid toxicity ordering: {0}")]
    InvalidPermutation(String),
}
