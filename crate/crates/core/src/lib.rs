//! Weighted-entropy trade-off design for Phase I/II regimen-finding trials.
//!
//! The crate is `no_std` (with `alloc`) and holds everything that is pure
//! computation: the trade-off function and its entropy origin, Beta posterior
//! estimation, the sequential allocation engine, scenario definitions and
//! single-trial simulation. IO, parallel replication and the service live in
//! the `wedesign` crate.

#![no_std]

extern crate alloc;

pub mod allocation;
pub mod config;
pub mod engine;
pub mod entropy;
pub mod error;
pub mod posterior;
pub mod regimen;
pub mod scenario;
pub mod simulate;
pub mod special;
pub mod tradeoff;

pub use allocation::randomization_weights;
pub use config::{
    linear_priors, priors_from_modes, AllocationRule, EfficacyDenominator, FutilitySchedule, PartialOrdering, SafetySchedule, TrialConfig,
};
pub use engine::{
    CohortRecord, Conclusion, Decision, DecisionTrace, PatientRecord, RegimenAssessment, RegimenCriteria, RegimenState,
    TerminationReason, TrialState,
};
pub use entropy::{dirichlet_weighted_entropy_gap, entropy_difference, DirichletCounts};
pub use error::{ConfigError, DomainError, EngineError, ScenarioError};
pub use posterior::{beta_tail, beta_tail_shape, posterior_mode, BetaPosterior, BetaPrior};
pub use regimen::Regimen;
pub use scenario::{evaluate_scenario, permute_scenario, sample_patient_outcome, Scenario, ScenarioEvaluation};
pub use simulate::{
    equal_allocation_trial, replication_rng, replication_seed, simulate_replication, simulate_trial,
    EqualAllocationCharacteristics, EqualAllocationResult, OperatingCharacteristics, SimulationError, TrialResult,
};
pub use tradeoff::{delta_from_rates, delta_from_triple, OutcomeTriple, TradeoffTargets};
