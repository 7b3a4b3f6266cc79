//! Single simulated trials and their aggregation.
//!
//! Timeline: cohort k's toxicity is known before cohort k+1 is allocated and
//! its efficacy just before cohort k+2 is allocated. With probability π_early
//! a patient's eventual lack of efficacy is already known at toxicity time.
//! After the last cohort every outstanding efficacy outcome is collected
//! before the recommendation is made. Trials stopped early keep their
//! outstanding outcomes unresolved.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{EfficacyDenominator, TrialConfig};
use crate::engine::{tie_rank, Conclusion, Decision, TerminationReason, TrialState};
use crate::error::{EngineError, ScenarioError};
use crate::posterior::BetaPosterior;
use crate::regimen::Regimen;
use crate::scenario::{OutcomeThresholds, Scenario, ScenarioEvaluation};
use crate::tradeoff::TradeoffTargets;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub state: TrialState,
    pub conclusion: Conclusion,
    /// Patients allocated to each regimen.
    pub allocated: Vec<u32>,
    pub toxicities: u32,
    /// Patients with an efficacious outcome, observed or not.
    pub efficacies: u32,
    /// Efficacy responses actually recorded by the engine.
    pub efficacies_observed: u32,
    /// Non-toxic patients recorded without efficacy.
    pub no_response_observed: u32,
    /// Non-toxic patients whose efficacy was never recorded.
    pub unresolved: u32,
}

impl TrialResult {
    pub fn recommendation(&self) -> Option<Regimen> {
        match self.conclusion {
            Conclusion::Recommended(r) => Some(r),
            Conclusion::Stopped(_) => None,
        }
    }

    pub fn patients(&self) -> u32 {
        self.allocated.iter().sum()
    }
}

/// Deterministic per-replication seed: a SplitMix64 step over the base seed
/// offset by the replication index.
pub fn replication_seed(base_seed: u64, replication: u64) -> u64 {
    let mut z = base_seed.wrapping_add(replication.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replication_rng(base_seed: u64, replication: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replication_seed(base_seed, replication))
}

fn check_dimensions(config: &TrialConfig, scenario: &Scenario) -> Result<(), ScenarioError> {
    scenario.validate()?;
    if scenario.num_regimens() != config.num_regimens {
        return Err(ScenarioError::DimensionMismatch {
            expected: config.num_regimens,
            got: scenario.num_regimens(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimulationError {
    #[error(transparent)]
    Config(#[from] crate::error::ConfigError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Latent outcomes of one cohort, kept by the simulator until the engine is
/// allowed to see them.
struct PendingCohort {
    index: usize,
    latent_eff: Vec<bool>,
}

/// Runs one complete trial.
pub fn simulate_trial<R: Rng + ?Sized>(
    config: &TrialConfig,
    scenario: &Scenario,
    rng: &mut R,
) -> Result<TrialResult, SimulationError> {
    check_dimensions(config, scenario)?;
    let thresholds = OutcomeThresholds::for_scenario(scenario);
    let mut state = TrialState::new(config.clone())?;
    let mut queue: Vec<PendingCohort> = Vec::new();
    let mut toxicities = 0;
    let mut efficacies = 0;

    while !state.is_exhausted() {
        let trace = state.select(rng)?;
        let regimen = match trace.decision {
            Decision::Allocate(r) => r,
            Decision::Terminate(reason) => {
                state.terminate(reason);
                break;
            }
        };
        let cohort = state.allocate(regimen)?;
        let mut tox = Vec::with_capacity(config.cohort_size as usize);
        let mut latent = Vec::with_capacity(config.cohort_size as usize);
        for _ in 0..config.cohort_size {
            let (t, e) = thresholds[regimen.index()].sample(rng);
            toxicities += t as u32;
            efficacies += e as u32;
            tox.push(t);
            latent.push(e);
        }
        state.record_cohort_toxicity(cohort, &tox)?;

        let mut early = vec![None; tox.len()];
        if scenario.pi_early > 0.0 {
            for (slot, (&t, &e)) in early.iter_mut().zip(tox.iter().zip(&latent)) {
                if !t && !e && rng.random::<f64>() < scenario.pi_early {
                    *slot = Some(false);
                }
            }
        }
        state.record_efficacy(cohort, &early)?;

        // The cohort allocated before this one has now waited long enough.
        if queue.len() == 1 {
            let due = queue.remove(0);
            reveal(&mut state, &due)?;
        }
        queue.push(PendingCohort { index: cohort, latent_eff: latent });
    }

    if state.terminated().is_none() {
        for due in &queue {
            reveal(&mut state, due)?;
        }
    }
    let conclusion = state.conclusion()?;
    if let Conclusion::Stopped(reason) = conclusion {
        state.terminate(reason);
    }

    let allocated = state.regimens().iter().map(|s| s.allocated).collect();
    let efficacies_observed = state.regimens().iter().map(|s| s.x_eff).sum();
    let no_response_observed = state.regimens().iter().map(|s| s.n_eff - s.x_eff).sum();
    let unresolved = state.regimens().iter().map(|s| s.pending_eff).sum();
    Ok(TrialResult {
        state,
        conclusion,
        allocated,
        toxicities,
        efficacies,
        efficacies_observed,
        no_response_observed,
        unresolved,
    })
}

fn reveal(state: &mut TrialState, cohort: &PendingCohort) -> Result<(), EngineError> {
    let record = &state.cohorts()[cohort.index];
    let outcomes: Vec<Option<bool>> = record
        .patients
        .iter()
        .zip(&cohort.latent_eff)
        .map(|(p, &e)| p.efficacy_pending().then_some(e))
        .collect();
    state.record_efficacy(cohort.index, &outcomes)
}

/// Runs replication `replication` of a study seeded by `base_seed`.
pub fn simulate_replication(
    config: &TrialConfig,
    scenario: &Scenario,
    base_seed: u64,
    replication: u64,
) -> Result<TrialResult, SimulationError> {
    simulate_trial(config, scenario, &mut replication_rng(base_seed, replication))
}

/// Aggregated outcome counts over replications. Merging is associative and
/// commutative so partial results from parallel lanes combine exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingCharacteristics {
    pub replications: u64,
    /// Trials recommending each regimen.
    pub recommendations: Vec<u64>,
    /// Total patients allocated to each regimen.
    pub allocated: Vec<u64>,
    pub safety_stops: u64,
    pub futility_stops: u64,
    pub toxicities: u64,
    pub efficacies: u64,
    pub efficacies_observed: u64,
}

fn pct(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

impl OperatingCharacteristics {
    pub fn new(num_regimens: usize) -> Self {
        Self {
            replications: 0,
            recommendations: vec![0; num_regimens],
            allocated: vec![0; num_regimens],
            safety_stops: 0,
            futility_stops: 0,
            toxicities: 0,
            efficacies: 0,
            efficacies_observed: 0,
        }
    }

    pub fn record(&mut self, result: &TrialResult) {
        self.replications += 1;
        match result.conclusion {
            Conclusion::Recommended(r) => self.recommendations[r.index()] += 1,
            Conclusion::Stopped(TerminationReason::Safety) => self.safety_stops += 1,
            Conclusion::Stopped(TerminationReason::Futility) => self.futility_stops += 1,
        }
        for (total, &n) in self.allocated.iter_mut().zip(&result.allocated) {
            *total += n as u64;
        }
        self.toxicities += result.toxicities as u64;
        self.efficacies += result.efficacies as u64;
        self.efficacies_observed += result.efficacies_observed as u64;
    }

    pub fn merge(mut self, other: &Self) -> Self {
        self.replications += other.replications;
        for (a, b) in self.recommendations.iter_mut().zip(&other.recommendations) {
            *a += b;
        }
        for (a, b) in self.allocated.iter_mut().zip(&other.allocated) {
            *a += b;
        }
        self.safety_stops += other.safety_stops;
        self.futility_stops += other.futility_stops;
        self.toxicities += other.toxicities;
        self.efficacies += other.efficacies;
        self.efficacies_observed += other.efficacies_observed;
        self
    }

    pub fn terminations(&self) -> u64 {
        self.safety_stops + self.futility_stops
    }

    pub fn recommendation_pct(&self, r: Regimen) -> f64 {
        pct(self.recommendations[r.index()], self.replications)
    }

    pub fn termination_pct(&self) -> f64 {
        pct(self.terminations(), self.replications)
    }

    pub fn mean_patients(&self, r: Regimen) -> f64 {
        self.mean(self.allocated[r.index()])
    }

    pub fn mean_toxicities(&self) -> f64 {
        self.mean(self.toxicities)
    }

    pub fn mean_efficacies(&self) -> f64 {
        self.mean(self.efficacies)
    }

    pub fn mean_efficacies_observed(&self) -> f64 {
        self.mean(self.efficacies_observed)
    }

    fn mean(&self, total: u64) -> f64 {
        if self.replications == 0 {
            0.0
        } else {
            total as f64 / self.replications as f64
        }
    }

    /// Share of trials recommending the optimal regimen, 0 if there is none.
    pub fn optimal_pct(&self, eval: &ScenarioEvaluation) -> f64 {
        eval.optimal.map_or(0.0, |r| self.recommendation_pct(r))
    }

    pub fn correct_pct(&self, eval: &ScenarioEvaluation) -> f64 {
        let hits = eval.correct.iter().map(|r| self.recommendations[r.index()]).sum();
        pct(hits, self.replications)
    }
}

/// Summary of one trial that allocates the same number of patients to
/// every regimen and picks at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualAllocationResult {
    /// Smallest estimated trade-off over all regimens.
    pub unfiltered: Regimen,
    /// Smallest estimated trade-off among regimens passing the terminal
    /// safety and futility levels, or `None` if none does.
    pub filtered: Option<Regimen>,
    pub per_regimen: u32,
    pub toxicities: u32,
    pub efficacies: u32,
}

/// Non-adaptive comparator: N/M patients per regimen, all outcomes observed.
///
/// The trade-off is evaluated at the sample proportions of the three
/// outcomes, without priors. A regimen where some outcome was never seen has
/// an infinite trade-off. The filtered pick applies the terminal safety and
/// futility levels to the Beta posteriors.
pub fn equal_allocation_trial<R: Rng + ?Sized>(
    config: &TrialConfig,
    scenario: &Scenario,
    rng: &mut R,
) -> Result<EqualAllocationResult, SimulationError> {
    check_dimensions(config, scenario)?;
    config.validate()?;
    let m = config.num_regimens;
    let per_regimen = config.max_patients / m as u32;
    let thresholds = OutcomeThresholds::for_scenario(scenario);
    let (mut toxicities, mut efficacies) = (0, 0);
    let mut deltas = Vec::with_capacity(m);
    let mut admissible = Vec::with_capacity(m);
    for (i, th) in thresholds.iter().enumerate() {
        let (mut x_tox, mut x_eff, mut n_eff) = (0, 0, 0);
        for _ in 0..per_regimen {
            let (t, e) = th.sample(rng);
            toxicities += t as u32;
            efficacies += e as u32;
            if t {
                x_tox += 1;
            } else {
                n_eff += 1;
                x_eff += e as u32;
            }
        }
        let tox = BetaPosterior::new(config.tox_priors[i], x_tox, per_regimen).expect("counts are consistent");
        let eff_trials = match config.efficacy_denominator {
            EfficacyDenominator::Settled => per_regimen,
            EfficacyDenominator::NonToxic => n_eff,
        };
        let eff = BetaPosterior::new(config.eff_priors[i], x_eff, eff_trials).expect("counts are consistent");
        let counts = [x_eff, n_eff - x_eff, x_tox];
        deltas.push(sample_tradeoff(counts, per_regimen, &config.targets));
        admissible.push(
            tox.tail(config.safety.phi_star) <= config.safety.zeta_n
                && eff.tail(config.futility.psi_star) >= config.futility.xi_n,
        );
    }
    let better = |a: &usize, b: &usize| {
        deltas[*a]
            .partial_cmp(&deltas[*b])
            .unwrap_or(core::cmp::Ordering::Equal)
            .then_with(|| tie_rank(config, Regimen(*a)).cmp(&tie_rank(config, Regimen(*b))))
    };
    let unfiltered = (0..m).min_by(better).map(Regimen).expect("at least two regimens");
    let filtered = (0..m).filter(|&i| admissible[i]).min_by(better).map(Regimen);
    Ok(EqualAllocationResult { unfiltered, filtered, per_regimen, toxicities, efficacies })
}

fn sample_tradeoff(counts: [u32; 3], n: u32, targets: &TradeoffTargets) -> f64 {
    let gamma = targets.triple().components();
    counts
        .iter()
        .zip(gamma)
        .map(|(&k, g)| {
            if k == 0 {
                return f64::INFINITY;
            }
            let theta = k as f64 / n as f64;
            (g - theta) * (g - theta) / theta
        })
        .sum()
}

/// Operating characteristics of the equal-allocation comparator, with and
/// without the terminal constraints applied to the final pick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualAllocationCharacteristics {
    pub unfiltered: OperatingCharacteristics,
    pub filtered: OperatingCharacteristics,
}

impl EqualAllocationCharacteristics {
    pub fn new(num_regimens: usize) -> Self {
        Self {
            unfiltered: OperatingCharacteristics::new(num_regimens),
            filtered: OperatingCharacteristics::new(num_regimens),
        }
    }

    pub fn record(&mut self, result: &EqualAllocationResult) {
        let m = self.unfiltered.allocated.len();
        for oc in [&mut self.unfiltered, &mut self.filtered] {
            oc.replications += 1;
            for a in oc.allocated.iter_mut().take(m) {
                *a += result.per_regimen as u64;
            }
            oc.toxicities += result.toxicities as u64;
            oc.efficacies += result.efficacies as u64;
        }
        self.unfiltered.recommendations[result.unfiltered.index()] += 1;
        match result.filtered {
            Some(r) => self.filtered.recommendations[r.index()] += 1,
            None => self.filtered.futility_stops += 1,
        }
    }

    pub fn merge(self, other: &Self) -> Self {
        Self {
            unfiltered: self.unfiltered.merge(&other.unfiltered),
            filtered: self.filtered.merge(&other.filtered),
        }
    }
}

/// Sequential reference implementation of the replication loop.
pub fn run_replications_serial(
    config: &TrialConfig,
    scenario: &Scenario,
    replications: u64,
    base_seed: u64,
) -> Result<OperatingCharacteristics, SimulationError> {
    let mut oc = OperatingCharacteristics::new(config.num_regimens);
    for r in 0..replications {
        oc.record(&simulate_replication(config, scenario, base_seed, r)?);
    }
    Ok(oc)
}
