//! Sequential trial state machine.
//!
//! Cohorts are allocated one at a time. Before each allocation the engine
//! estimates every regimen's toxicity and efficacy rates by their Beta
//! posterior modes, plugs them into the trade-off function, and filters the
//! regimens through four gates:
//!
//! * safety: P(tox rate > φ*) ≤ ζ(n_tox),
//! * futility: P(eff rate > ψ*) ≥ ξ(n_eff),
//! * coherence with the previous cohort along the declared orderings,
//! * no skipping of untried regimens along the declared orderings.
//!
//! Toxicity and efficacy are recorded independently so that efficacy, which
//! arrives later, is estimated from fewer patients than toxicity.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::{pick, randomization_weights};
use crate::config::{AllocationRule, EfficacyDenominator, TrialConfig};
use crate::error::{ConfigError, EngineError};
use crate::posterior::{BetaPosterior, BetaPrior};
use crate::regimen::Regimen;
use crate::tradeoff::delta_from_rates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RegimenState {
    /// Patients whose toxicity outcome is known.
    pub n_tox: u32,
    pub x_tox: u32,
    /// Patients whose efficacy outcome is known.
    pub n_eff: u32,
    pub x_eff: u32,
    /// Non-toxic patients still awaiting their efficacy outcome.
    pub pending_eff: u32,
    /// Patients allocated, outcomes known or not.
    pub allocated: u32,
    pub ever_tried: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PatientRecord {
    pub toxicity: Option<bool>,
    pub efficacy: Option<bool>,
    pub toxicity_at: Option<u64>,
    pub efficacy_at: Option<u64>,
}

impl PatientRecord {
    pub fn efficacy_pending(&self) -> bool {
        self.toxicity == Some(false) && self.efficacy.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortRecord {
    pub index: usize,
    pub regimen: Regimen,
    pub allocated_at: u64,
    pub patients: Vec<PatientRecord>,
}

impl CohortRecord {
    /// Number of toxicities, once the cohort's toxicity outcomes are in.
    pub fn toxicities(&self) -> Option<u32> {
        if self.patients.iter().all(|p| p.toxicity.is_some()) {
            Some(self.patients.iter().filter(|p| p.toxicity == Some(true)).count() as u32)
        } else {
            None
        }
    }

    pub fn toxicity_recorded(&self) -> bool {
        self.patients.iter().all(|p| p.toxicity.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminationReason {
    Safety,
    Futility,
}

/// Plug-in estimates for one regimen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimenCriteria {
    pub tox_mode: f64,
    pub eff_mode: f64,
    pub delta_hat: f64,
}

/// Everything the engine considered for one regimen at a decision point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimenAssessment {
    pub regimen: Regimen,
    pub tox_mode: f64,
    pub eff_mode: f64,
    pub delta_hat: f64,
    pub tox_tail: f64,
    pub eff_tail: f64,
    pub safety_level: f64,
    pub futility_level: f64,
    pub safe: bool,
    pub efficacious: bool,
    pub coherent: bool,
    pub no_skip: bool,
}

impl RegimenAssessment {
    pub fn admissible(&self) -> bool {
        self.safe && self.efficacious
    }

    pub fn candidate(&self) -> bool {
        self.safe && self.efficacious && self.coherent && self.no_skip
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "value", rename_all = "lowercase")]
pub enum Decision {
    Allocate(Regimen),
    Terminate(TerminationReason),
}

/// Audit record of a single allocation decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTrace {
    pub regimens: Vec<RegimenAssessment>,
    pub decision: Decision,
    /// Randomisation weights, present under the randomised rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// The uniform draw that resolved the randomisation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draw: Option<f64>,
}

impl DecisionTrace {
    pub fn chosen(&self) -> Option<Regimen> {
        match self.decision {
            Decision::Allocate(r) => Some(r),
            Decision::Terminate(_) => None,
        }
    }
}

/// How a finished trial ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "lowercase")]
pub enum Conclusion {
    Recommended(Regimen),
    Stopped(TerminationReason),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialState {
    config: TrialConfig,
    regimens: Vec<RegimenState>,
    cohorts: Vec<CohortRecord>,
    terminated: Option<TerminationReason>,
    patients_enrolled: u32,
    clock: u64,
}

/// Which constraint levels to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Levels {
    /// Schedules evaluated at each regimen's own observation counts.
    Interim,
    /// The terminal levels ζ_N and ξ_N.
    Terminal,
}

impl TrialState {
    pub fn new(config: TrialConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let m = config.num_regimens;
        Ok(Self {
            config,
            regimens: vec![RegimenState::default(); m],
            cohorts: Vec::new(),
            terminated: None,
            patients_enrolled: 0,
            clock: 0,
        })
    }

    pub fn config(&self) -> &TrialConfig {
        &self.config
    }

    pub fn regimens(&self) -> &[RegimenState] {
        &self.regimens
    }

    pub fn regimen(&self, r: Regimen) -> &RegimenState {
        &self.regimens[r.index()]
    }

    pub fn cohorts(&self) -> &[CohortRecord] {
        &self.cohorts
    }

    pub fn terminated(&self) -> Option<TerminationReason> {
        self.terminated
    }

    pub fn patients_enrolled(&self) -> u32 {
        self.patients_enrolled
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn is_exhausted(&self) -> bool {
        self.patients_enrolled >= self.config.max_patients
    }

    /// (regimen, toxicity count) of the most recent cohort, if its toxicity is known.
    pub fn last_cohort(&self) -> Option<(Regimen, Option<u32>)> {
        self.cohorts.last().map(|c| (c.regimen, c.toxicities()))
    }

    fn tox_posterior(&self, i: usize) -> BetaPosterior {
        let s = &self.regimens[i];
        posterior(self.config.tox_priors[i], s.x_tox, s.n_tox)
    }

    fn eff_posterior(&self, i: usize) -> BetaPosterior {
        posterior(self.config.eff_priors[i], self.regimens[i].x_eff, self.efficacy_trials(i))
    }

    /// Number of patients behind regimen i's efficacy estimate.
    pub fn efficacy_trials(&self, i: usize) -> u32 {
        let s = &self.regimens[i];
        match self.config.efficacy_denominator {
            EfficacyDenominator::Settled => s.n_eff + s.x_tox,
            EfficacyDenominator::NonToxic => s.n_eff,
        }
    }

    /// Posterior modes and plug-in trade-off for every regimen.
    pub fn current_criteria(&self) -> Vec<RegimenCriteria> {
        (0..self.config.num_regimens)
            .map(|i| {
                let tox_mode = self.tox_posterior(i).mode();
                let eff_mode = self.eff_posterior(i).mode();
                let delta_hat = delta_from_rates(tox_mode, eff_mode, &self.config.targets)
                    .expect("posterior modes lie strictly inside (0, 1)");
                RegimenCriteria { tox_mode, eff_mode, delta_hat }
            })
            .collect()
    }

    /// Every regimen judged against the constraints at the current
    /// observation counts, together with its coherence and no-skip status.
    pub fn assessments(&self) -> Vec<RegimenAssessment> {
        self.assess(Levels::Interim)
    }

    /// Regimens passing both the safety and the futility constraint at the
    /// current observation counts.
    pub fn admissible_set(&self) -> Vec<Regimen> {
        self.assess(Levels::Interim)
            .into_iter()
            .filter(|a| a.admissible())
            .map(|a| a.regimen)
            .collect()
    }

    /// Whether allocating `candidate` next respects coherent escalation and
    /// de-escalation relative to the previous cohort.
    ///
    /// After at least q toxicities the next cohort may not move up any chain
    /// containing both regimens; after fewer than q it may not move down one.
    /// Before the first cohort, and while the previous cohort's toxicity is
    /// unknown, nothing is blocked.
    pub fn coherence_allowed(&self, candidate: Regimen) -> bool {
        let Some((last, Some(q_obs))) = self.last_cohort() else {
            return true;
        };
        if candidate == last {
            return true;
        }
        let escalation_blocked = q_obs >= self.config.coherence_threshold;
        for ordering in &self.config.orderings {
            if let (Some(pc), Some(pl)) = (ordering.position(candidate), ordering.position(last)) {
                if escalation_blocked && pc > pl {
                    return false;
                }
                if !escalation_blocked && pc < pl {
                    return false;
                }
            }
        }
        true
    }

    /// An untried regimen may be allocated only once every regimen directly
    /// below it, in every chain containing it, has been tried.
    pub fn no_skip_allowed(&self, candidate: Regimen) -> bool {
        if self.regimens[candidate.index()].ever_tried {
            return true;
        }
        self.config
            .orderings
            .iter()
            .filter_map(|o| o.predecessor(candidate))
            .all(|p| self.regimens[p.index()].ever_tried)
    }

    fn assess(&self, levels: Levels) -> Vec<RegimenAssessment> {
        let criteria = self.current_criteria();
        let safety = &self.config.safety;
        let futility = &self.config.futility;
        criteria
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let regimen = Regimen(i);
                let s = &self.regimens[i];
                let (safety_level, futility_level) = match levels {
                    Levels::Interim => (safety.level(s.n_tox), futility.level(self.efficacy_trials(i))),
                    Levels::Terminal => (safety.zeta_n, futility.xi_n),
                };
                let tox_tail = self.tox_posterior(i).tail(safety.phi_star);
                let eff_tail = self.eff_posterior(i).tail(futility.psi_star);
                RegimenAssessment {
                    regimen,
                    tox_mode: c.tox_mode,
                    eff_mode: c.eff_mode,
                    delta_hat: c.delta_hat,
                    tox_tail,
                    eff_tail,
                    safety_level,
                    futility_level,
                    safe: tox_tail <= safety_level,
                    efficacious: eff_tail >= futility_level,
                    coherent: self.coherence_allowed(regimen),
                    no_skip: self.no_skip_allowed(regimen),
                }
            })
            .collect()
    }

    fn compare(&self, assessments: &[RegimenAssessment], a: Regimen, b: Regimen) -> Ordering {
        let da = assessments[a.index()].delta_hat;
        let db = assessments[b.index()].delta_hat;
        da.partial_cmp(&db)
            .unwrap_or(Ordering::Equal)
            .then_with(|| tie_rank(&self.config, a).cmp(&tie_rank(&self.config, b)))
    }

    fn check_can_select(&self) -> Result<(), EngineError> {
        if self.terminated.is_some() {
            return Err(EngineError::Terminated);
        }
        if self.is_exhausted() {
            return Err(EngineError::Exhausted(self.config.max_patients));
        }
        if let Some(last) = self.cohorts.last() {
            if !last.toxicity_recorded() {
                return Err(EngineError::AwaitingToxicity(last.index));
            }
        }
        Ok(())
    }

    /// Candidates ordered best first, or the termination reason if none remain.
    ///
    /// An empty candidate set stops the trial: for safety when no reachable
    /// regimen is safe, otherwise for futility.
    fn ranked_candidates(&self, assessments: &[RegimenAssessment]) -> Result<Vec<Regimen>, TerminationReason> {
        let mut candidates: Vec<Regimen> = assessments.iter().filter(|a| a.candidate()).map(|a| a.regimen).collect();
        if candidates.is_empty() {
            let reachable_safe = assessments.iter().any(|a| a.coherent && a.no_skip && a.safe);
            return Err(if reachable_safe { TerminationReason::Futility } else { TerminationReason::Safety });
        }
        candidates.sort_by(|&a, &b| self.compare(assessments, a, b));
        Ok(candidates)
    }

    /// Regimen for the next cohort under the non-randomised rule.
    pub fn select_next_cohort(&self) -> Result<DecisionTrace, EngineError> {
        self.check_can_select()?;
        let regimens = self.assess(Levels::Interim);
        let decision = match self.ranked_candidates(&regimens) {
            Ok(ranked) => Decision::Allocate(ranked[0]),
            Err(reason) => Decision::Terminate(reason),
        };
        Ok(DecisionTrace { regimens, decision, weights: None, draw: None })
    }

    /// Regimen for the next cohort under the randomised rule, resolved by a
    /// uniform draw `u` in [0, 1).
    pub fn select_with_draw(&self, u: f64) -> Result<DecisionTrace, EngineError> {
        self.check_can_select()?;
        let regimens = self.assess(Levels::Interim);
        match self.ranked_candidates(&regimens) {
            Ok(ranked) => {
                let deltas: Vec<f64> = regimens.iter().map(|a| a.delta_hat).collect();
                let weights = randomization_weights(&deltas, &ranked);
                let chosen = pick(&weights, &ranked, u);
                Ok(DecisionTrace {
                    regimens,
                    decision: Decision::Allocate(chosen),
                    weights: Some(weights),
                    draw: Some(u),
                })
            }
            Err(reason) => Ok(DecisionTrace {
                regimens,
                decision: Decision::Terminate(reason),
                weights: None,
                draw: Some(u),
            }),
        }
    }

    /// Randomised selection consuming exactly one value from `rng`.
    pub fn select_next_cohort_randomized<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DecisionTrace, EngineError> {
        self.check_can_select()?;
        let u: f64 = rng.random();
        self.select_with_draw(u)
    }

    /// Selection under the configured allocation rule.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DecisionTrace, EngineError> {
        match self.config.rule {
            AllocationRule::We => self.select_next_cohort(),
            AllocationRule::WeR => self.select_next_cohort_randomized(rng),
        }
    }

    /// Enrols the next cohort at `regimen` and returns its index.
    pub fn allocate(&mut self, regimen: Regimen) -> Result<usize, EngineError> {
        self.check_can_select()?;
        if regimen.index() >= self.config.num_regimens {
            return Err(EngineError::RegimenOutOfRange(regimen));
        }
        let size = self.config.cohort_size;
        self.clock += 1;
        let index = self.cohorts.len();
        self.cohorts.push(CohortRecord {
            index,
            regimen,
            allocated_at: self.clock,
            patients: vec![PatientRecord::default(); size as usize],
        });
        let s = &mut self.regimens[regimen.index()];
        s.allocated += size;
        s.ever_tried = true;
        self.patients_enrolled += size;
        Ok(index)
    }

    pub fn terminate(&mut self, reason: TerminationReason) {
        if self.terminated.is_none() {
            self.terminated = Some(reason);
        }
    }

    /// Records the toxicity outcome of every patient in a cohort. Non-toxic
    /// patients start waiting for their efficacy outcome; toxic patients never
    /// produce one.
    pub fn record_cohort_toxicity(&mut self, cohort: usize, outcomes: &[bool]) -> Result<(), EngineError> {
        let record = self.cohorts.get(cohort).ok_or(EngineError::UnknownCohort(cohort))?;
        if record.patients.iter().any(|p| p.toxicity.is_some()) {
            return Err(EngineError::DuplicateToxicity(cohort));
        }
        if outcomes.len() != record.patients.len() {
            return Err(EngineError::OutcomeCount {
                cohort,
                expected: record.patients.len(),
                got: outcomes.len(),
            });
        }
        self.clock += 1;
        let now = self.clock;
        let record = &mut self.cohorts[cohort];
        let mut toxic = 0;
        for (patient, &tox) in record.patients.iter_mut().zip(outcomes) {
            patient.toxicity = Some(tox);
            patient.toxicity_at = Some(now);
            toxic += tox as u32;
        }
        let s = &mut self.regimens[record.regimen.index()];
        s.n_tox += outcomes.len() as u32;
        s.x_tox += toxic;
        s.pending_eff += outcomes.len() as u32 - toxic;
        Ok(())
    }

    /// Records efficacy outcomes for some or all of a cohort's pending
    /// patients. `outcomes` is empty (no-op) or aligned with the cohort's
    /// patients, `None` marking patients not reported now.
    pub fn record_efficacy(&mut self, cohort: usize, outcomes: &[Option<bool>]) -> Result<(), EngineError> {
        if outcomes.is_empty() {
            return Ok(());
        }
        let record = self.cohorts.get(cohort).ok_or(EngineError::UnknownCohort(cohort))?;
        if outcomes.len() != record.patients.len() {
            return Err(EngineError::OutcomeCount {
                cohort,
                expected: record.patients.len(),
                got: outcomes.len(),
            });
        }
        for (patient, (p, o)) in record.patients.iter().zip(outcomes).enumerate() {
            if o.is_some() && !p.efficacy_pending() {
                return Err(EngineError::UnknownPatient { cohort, patient });
            }
        }
        if outcomes.iter().all(Option::is_none) {
            return Ok(());
        }
        self.clock += 1;
        let now = self.clock;
        let record = &mut self.cohorts[cohort];
        let (mut reported, mut responses) = (0u32, 0u32);
        for (patient, outcome) in record.patients.iter_mut().zip(outcomes) {
            if let Some(eff) = *outcome {
                patient.efficacy = Some(eff);
                patient.efficacy_at = Some(now);
                reported += 1;
                responses += eff as u32;
            }
        }
        let s = &mut self.regimens[record.regimen.index()];
        s.pending_eff -= reported;
        s.n_eff += reported;
        s.x_eff += responses;
        Ok(())
    }

    /// Assessment of every regimen against the terminal constraint levels.
    pub fn terminal_assessment(&self) -> Vec<RegimenAssessment> {
        self.assess(Levels::Terminal)
    }

    /// The recommended regimen once the trial is over: the admissible regimen
    /// with the smallest trade-off, each regimen judged at the schedule levels
    /// for its own observation counts. `None` if the trial stopped early or
    /// nothing is admissible.
    pub fn final_recommendation(&self) -> Result<Option<Regimen>, EngineError> {
        Ok(match self.conclusion()? {
            Conclusion::Recommended(r) => Some(r),
            Conclusion::Stopped(_) => None,
        })
    }

    pub fn conclusion(&self) -> Result<Conclusion, EngineError> {
        if let Some(reason) = self.terminated {
            return Ok(Conclusion::Stopped(reason));
        }
        if !self.is_exhausted() {
            return Err(EngineError::InProgress);
        }
        let assessments = self.assess(Levels::Interim);
        let best = assessments
            .iter()
            .filter(|a| a.admissible())
            .map(|a| a.regimen)
            .min_by(|&a, &b| self.compare(&assessments, a, b));
        Ok(match best {
            Some(r) => Conclusion::Recommended(r),
            None if assessments.iter().any(|a| a.safe) => Conclusion::Stopped(TerminationReason::Futility),
            None => Conclusion::Stopped(TerminationReason::Safety),
        })
    }
}

/// Tie-break rank: depth of the regimen along the declared orderings, then
/// its index. For regimens on the first ordering this is their position
/// along it.
pub(crate) fn tie_rank(config: &TrialConfig, r: Regimen) -> (usize, usize) {
    let depth = config.orderings.iter().filter_map(|o| o.position(r)).max().unwrap_or(0);
    (depth, r.index())
}

fn posterior(prior: BetaPrior, events: u32, trials: u32) -> BetaPosterior {
    BetaPosterior::new(prior, events, trials).expect("event counts never exceed trial counts")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{priors_from_modes, FutilitySchedule, PartialOrdering, SafetySchedule};
    use crate::tradeoff::TradeoffTargets;
    use alloc::vec::Vec;

    fn motivating_chains() -> Vec<PartialOrdering> {
        vec![
            PartialOrdering::from_labels(&[1, 2, 3, 6]),
            PartialOrdering::from_labels(&[1, 2, 4, 6]),
            PartialOrdering::from_labels(&[1, 2, 5, 6]),
        ]
    }

    fn illustration_config() -> TrialConfig {
        TrialConfig {
            num_regimens: 6,
            max_patients: 36,
            cohort_size: 2,
            targets: TradeoffTargets::new(0.01, 0.99).unwrap(),
            tox_priors: priors_from_modes(&[0.10, 0.175, 0.25, 0.325, 0.40, 0.475]).unwrap(),
            eff_priors: priors_from_modes(&[0.60, 0.65, 0.70, 0.75, 0.80, 0.85]).unwrap(),
            orderings: motivating_chains(),
            coherence_threshold: 1,
            safety: SafetySchedule::disabled(),
            futility: FutilitySchedule::disabled(),
            rule: AllocationRule::We,
            efficacy_denominator: EfficacyDenominator::Settled,
            rng_seed: 0,
        }
    }

    fn study_constraints(mut cfg: TrialConfig) -> TrialConfig {
        cfg.safety = SafetySchedule::new(0.4, 0.3, 0.02);
        cfg.futility = FutilitySchedule::new(0.35, 0.5, 0.05);
        cfg
    }

    /// Allocates and records a cohort, revealing the efficacy of the cohort
    /// before it, and returns the regimen the engine chose.
    fn step(state: &mut TrialState, tox: &[bool], eff: &[bool], held: &mut Option<(usize, Vec<bool>)>) -> Regimen {
        let r = state.select_next_cohort().unwrap().chosen().expect("allocation");
        let k = state.allocate(r).unwrap();
        state.record_cohort_toxicity(k, tox).unwrap();
        if let Some((prev, e)) = held.take() {
            reveal(state, prev, &e);
        }
        *held = Some((k, eff.to_vec()));
        r
    }

    fn reveal(state: &mut TrialState, cohort: usize, eff: &[bool]) {
        let outcomes: Vec<Option<bool>> = state.cohorts()[cohort]
            .patients
            .iter()
            .zip(eff)
            .map(|(p, &e)| p.efficacy_pending().then_some(e))
            .collect();
        state.record_efficacy(cohort, &outcomes).unwrap();
    }

    const N: bool = false;
    const Y: bool = true;

    /// (toxicity, latent efficacy) per cohort of the single illustrated trial.
    const FIGURE_TRACE: [([bool; 2], [bool; 2]); 18] = [
        ([N, N], [N, N]),
        ([N, N], [N, N]),
        ([N, N], [N, N]),
        ([N, N], [N, N]),
        ([Y, Y], [N, N]),
        ([N, N], [Y, N]),
        ([N, N], [N, N]),
        ([N, N], [N, N]),
        ([N, N], [Y, N]),
        ([Y, N], [N, N]),
        ([N, N], [N, N]),
        ([Y, Y], [N, N]),
        ([N, N], [Y, N]),
        ([N, N], [Y, N]),
        ([N, N], [N, Y]),
        ([N, N], [Y, N]),
        ([N, N], [N, Y]),
        ([N, N], [Y, N]),
    ];

    const FIGURE_ALLOCATION: [usize; 18] = [1, 1, 2, 2, 3, 4, 4, 4, 5, 5, 5, 6, 4, 4, 4, 4, 4, 4];

    fn replay_figure(cfg: TrialConfig) -> (TrialState, Vec<usize>) {
        let mut state = TrialState::new(cfg).unwrap();
        let mut held = None;
        let mut labels = Vec::new();
        for (tox, eff) in FIGURE_TRACE {
            labels.push(step(&mut state, &tox, &eff, &mut held).label());
        }
        let (k, e) = held.unwrap();
        reveal(&mut state, k, &e);
        (state, labels)
    }

    #[test]
    fn figure_trace_is_reproduced() {
        let (state, labels) = replay_figure(illustration_config());
        assert_eq!(labels, FIGURE_ALLOCATION);
        assert_eq!(state.final_recommendation().unwrap(), Some(Regimen(3)));
    }

    #[test]
    fn figure_trace_is_reproduced_under_constraints() {
        let (state, labels) = replay_figure(study_constraints(illustration_config()));
        assert_eq!(labels, FIGURE_ALLOCATION);
        assert_eq!(state.final_recommendation().unwrap(), Some(Regimen(3)));
    }

    #[test]
    fn figure_prefix_holds_with_non_toxic_denominator() {
        let mut cfg = illustration_config();
        cfg.efficacy_denominator = EfficacyDenominator::NonToxic;
        let mut state = TrialState::new(cfg).unwrap();
        let mut held = None;
        for (k, (tox, eff)) in FIGURE_TRACE.iter().take(12).enumerate() {
            assert_eq!(step(&mut state, tox, eff, &mut held).label(), FIGURE_ALLOCATION[k], "cohort {}", k + 1);
        }
    }

    fn non_toxic(mut cfg: TrialConfig) -> TrialConfig {
        cfg.efficacy_denominator = EfficacyDenominator::NonToxic;
        cfg
    }

    fn two_regimens(tox: &[f64], eff: &[f64]) -> TrialConfig {
        TrialConfig {
            num_regimens: 2,
            max_patients: 8,
            cohort_size: 2,
            tox_priors: priors_from_modes(tox).unwrap(),
            eff_priors: priors_from_modes(eff).unwrap(),
            orderings: Vec::new(),
            ..non_toxic(illustration_config())
        }
    }

    #[test]
    fn fresh_trial_modes_are_the_priors() {
        let state = TrialState::new(illustration_config()).unwrap();
        let c = state.current_criteria();
        let tox = [0.10, 0.175, 0.25, 0.325, 0.40, 0.475];
        let eff = [0.60, 0.65, 0.70, 0.75, 0.80, 0.85];
        for i in 0..6 {
            assert!((c[i].tox_mode - tox[i]).abs() < 1e-12);
            assert!((c[i].eff_mode - eff[i]).abs() < 1e-12);
        }
        assert_eq!(state.select_next_cohort().unwrap().chosen(), Some(Regimen(0)));
    }

    #[test]
    fn modes_use_separate_denominators() {
        let mut state = TrialState::new(non_toxic(illustration_config())).unwrap();
        let k = state.allocate(Regimen(0)).unwrap();
        state.record_cohort_toxicity(k, &[true, false]).unwrap();
        state.record_efficacy(k, &[None, Some(false)]).unwrap();
        let c = state.current_criteria()[0];
        assert!((c.tox_mode - 1.1 / 3.0).abs() < 1e-12);
        assert!((c.eff_mode - 0.30).abs() < 1e-12);
    }

    #[test]
    fn untried_regimens_are_admissible() {
        let state = TrialState::new(study_constraints(illustration_config())).unwrap();
        assert_eq!(state.admissible_set().len(), 6);
    }

    #[test]
    fn six_toxicities_exclude_a_regimen() {
        let mut state = TrialState::new(study_constraints(illustration_config())).unwrap();
        for _ in 0..3 {
            let k = state.allocate(Regimen(0)).unwrap();
            state.record_cohort_toxicity(k, &[true, true]).unwrap();
        }
        let a = &state.assess(Levels::Interim)[0];
        assert!((a.safety_level - 0.88).abs() < 1e-12);
        assert!(a.tox_tail > 0.88);
        assert!(!a.safe);
        assert!(!state.admissible_set().contains(&Regimen(0)));
    }

    #[test]
    fn ten_failures_exclude_a_regimen() {
        let mut state = TrialState::new(non_toxic(study_constraints(illustration_config()))).unwrap();
        for _ in 0..5 {
            let k = state.allocate(Regimen(0)).unwrap();
            state.record_cohort_toxicity(k, &[false, false]).unwrap();
            state.record_efficacy(k, &[Some(false), Some(false)]).unwrap();
        }
        let a = &state.assess(Levels::Interim)[0];
        assert!((a.futility_level - 0.5).abs() < 1e-12);
        assert!(a.eff_tail < 0.5);
        assert!(a.safe && !a.efficacious);
    }

    #[test]
    fn coherence_after_toxicities() {
        let mut state = TrialState::new(illustration_config()).unwrap();
        let k = state.allocate(Regimen(2)).unwrap();
        assert!(state.coherence_allowed(Regimen(5)), "unknown toxicity blocks nothing");
        state.record_cohort_toxicity(k, &[true, true]).unwrap();
        assert!(!state.coherence_allowed(Regimen(5)));
        assert!(state.coherence_allowed(Regimen(3)));
        assert!(state.coherence_allowed(Regimen(1)));
        assert!(state.coherence_allowed(Regimen(2)));
    }

    #[test]
    fn coherence_without_toxicities() {
        let mut state = TrialState::new(illustration_config()).unwrap();
        let k = state.allocate(Regimen(3)).unwrap();
        state.record_cohort_toxicity(k, &[false, false]).unwrap();
        assert!(!state.coherence_allowed(Regimen(1)));
        assert!(!state.coherence_allowed(Regimen(0)));
        assert!(state.coherence_allowed(Regimen(4)));
        assert!(state.coherence_allowed(Regimen(5)));
        assert!(state.coherence_allowed(Regimen(3)));
    }

    #[test]
    fn no_skip_follows_every_chain() {
        let mut state = TrialState::new(illustration_config()).unwrap();
        assert!(state.no_skip_allowed(Regimen(0)));
        assert!(!state.no_skip_allowed(Regimen(1)));
        for r in [0, 1, 2] {
            let k = state.allocate(Regimen(r)).unwrap();
            state.record_cohort_toxicity(k, &[false, false]).unwrap();
        }
        assert!(state.no_skip_allowed(Regimen(3)));
        assert!(state.no_skip_allowed(Regimen(4)));
        assert!(!state.no_skip_allowed(Regimen(5)), "T6 also sits above T4 and T5");
    }

    #[test]
    fn unsafe_best_regimen_is_passed_over() {
        let mut cfg = two_regimens(&[0.01, 0.30], &[0.10, 0.90]);
        cfg.safety = SafetySchedule::new(0.25, 0.5, 1.0);
        let mut state = TrialState::new(cfg).unwrap();
        for (r, tox) in [(0, [false, false]), (1, [true, false])] {
            let k = state.allocate(Regimen(r)).unwrap();
            state.record_cohort_toxicity(k, &tox).unwrap();
        }
        let trace = state.select_next_cohort().unwrap();
        assert!(trace.regimens[1].delta_hat < trace.regimens[0].delta_hat);
        assert!(!trace.regimens[1].safe);
        assert_eq!(trace.chosen(), Some(Regimen(0)));
    }

    #[test]
    fn empty_candidate_set_terminates() {
        let mut cfg = two_regimens(&[0.30, 0.30], &[0.60, 0.60]);
        cfg.safety = SafetySchedule::new(0.05, 0.3, 1.0);
        let mut state = TrialState::new(cfg.clone()).unwrap();
        for r in [0, 1] {
            let k = state.allocate(Regimen(r)).unwrap();
            state.record_cohort_toxicity(k, &[true, false]).unwrap();
        }
        let trace = state.select_next_cohort().unwrap();
        assert_eq!(trace.decision, Decision::Terminate(TerminationReason::Safety));

        cfg.safety = SafetySchedule::disabled();
        cfg.futility = FutilitySchedule::new(0.9, 0.5, 1.0);
        let mut state = TrialState::new(cfg).unwrap();
        for r in [0, 1] {
            let k = state.allocate(Regimen(r)).unwrap();
            state.record_cohort_toxicity(k, &[false, false]).unwrap();
            state.record_efficacy(k, &[Some(false), Some(false)]).unwrap();
        }
        let trace = state.select_next_cohort().unwrap();
        assert_eq!(trace.decision, Decision::Terminate(TerminationReason::Futility));
    }

    #[test]
    fn toxicity_bookkeeping() {
        let mut state = TrialState::new(illustration_config()).unwrap();
        let cases: [([bool; 2], u32, u32); 3] = [([true, false], 1, 1), ([false, false], 0, 2), ([true, true], 2, 0)];
        for (outcomes, tox, pending) in cases {
            let before = *state.regimen(Regimen(0));
            let k = state.allocate(Regimen(0)).unwrap();
            state.record_cohort_toxicity(k, &outcomes).unwrap();
            let after = *state.regimen(Regimen(0));
            assert_eq!(after.n_tox - before.n_tox, 2);
            assert_eq!(after.x_tox - before.x_tox, tox);
            assert_eq!(after.pending_eff - before.pending_eff, pending);
            assert_eq!(state.last_cohort(), Some((Regimen(0), Some(tox))));
        }
        assert_eq!(state.record_cohort_toxicity(0, &[false, false]), Err(EngineError::DuplicateToxicity(0)));
    }

    #[test]
    fn efficacy_bookkeeping() {
        let mut state = TrialState::new(illustration_config()).unwrap();
        let k = state.allocate(Regimen(0)).unwrap();
        state.record_cohort_toxicity(k, &[false, false]).unwrap();
        let before = state.clone();
        state.record_efficacy(k, &[]).unwrap();
        assert_eq!(state, before);
        state.record_efficacy(k, &[Some(true), Some(false)]).unwrap();
        let s = state.regimen(Regimen(0));
        assert_eq!((s.n_eff, s.x_eff, s.pending_eff), (2, 1, 0));
        assert_eq!(
            state.record_efficacy(k, &[Some(true), None]),
            Err(EngineError::UnknownPatient { cohort: k, patient: 0 })
        );
    }

    #[test]
    fn toxic_patients_never_report_efficacy() {
        let mut state = TrialState::new(illustration_config()).unwrap();
        let k = state.allocate(Regimen(0)).unwrap();
        state.record_cohort_toxicity(k, &[true, false]).unwrap();
        assert!(state.record_efficacy(k, &[Some(true), Some(true)]).is_err());
        state.record_efficacy(k, &[None, Some(true)]).unwrap();
    }

    #[test]
    fn efficacy_recording_order_does_not_matter() {
        let run = |early: bool| {
            let mut state = TrialState::new(illustration_config()).unwrap();
            let a = state.allocate(Regimen(0)).unwrap();
            state.record_cohort_toxicity(a, &[false, false]).unwrap();
            if early {
                state.record_efficacy(a, &[Some(false), None]).unwrap();
            }
            let b = state.allocate(Regimen(1)).unwrap();
            state.record_cohort_toxicity(b, &[false, true]).unwrap();
            if early {
                state.record_efficacy(a, &[None, Some(true)]).unwrap();
            } else {
                state.record_efficacy(a, &[Some(false), Some(true)]).unwrap();
            }
            state.record_efficacy(b, &[Some(true), None]).unwrap();
            state
        };
        let (early, late) = (run(true), run(false));
        assert_eq!(early.regimens(), late.regimens());
        assert_eq!(early.current_criteria(), late.current_criteria());
        assert_eq!(early.select_next_cohort().unwrap().decision, late.select_next_cohort().unwrap().decision);
    }

    #[test]
    fn identical_data_recommends_lower_ordered_regimen() {
        let mut cfg = two_regimens(&[0.2, 0.2], &[0.6, 0.6]);
        cfg.max_patients = 4;
        let mut state = TrialState::new(cfg).unwrap();
        for r in [1, 0] {
            let k = state.allocate(Regimen(r)).unwrap();
            state.record_cohort_toxicity(k, &[false, true]).unwrap();
            state.record_efficacy(k, &[Some(true), None]).unwrap();
        }
        assert!(state.is_exhausted());
        assert_eq!(state.final_recommendation().unwrap(), Some(Regimen(0)));
    }

    #[test]
    fn terminated_trial_recommends_nothing() {
        let mut state = TrialState::new(illustration_config()).unwrap();
        assert_eq!(state.final_recommendation(), Err(EngineError::InProgress));
        state.terminate(TerminationReason::Safety);
        assert_eq!(state.final_recommendation().unwrap(), None);
        assert_eq!(state.conclusion().unwrap(), Conclusion::Stopped(TerminationReason::Safety));
        assert_eq!(state.select_next_cohort(), Err(EngineError::Terminated));
    }

    #[test]
    fn selection_waits_for_toxicity() {
        let mut state = TrialState::new(illustration_config()).unwrap();
        state.allocate(Regimen(0)).unwrap();
        assert_eq!(state.select_next_cohort(), Err(EngineError::AwaitingToxicity(0)));
    }

    #[test]
    fn randomised_choice_has_all_flags() {
        let mut cfg = illustration_config();
        cfg.rule = AllocationRule::WeR;
        let mut state = TrialState::new(cfg).unwrap();
        for r in [0, 1] {
            let k = state.allocate(Regimen(r)).unwrap();
            state.record_cohort_toxicity(k, &[false, false]).unwrap();
        }
        for u in [0.0, 0.3, 0.6, 0.999] {
            let trace = state.select_with_draw(u).unwrap();
            let r = trace.chosen().unwrap();
            assert!(trace.regimens[r.index()].candidate());
            let w = trace.weights.as_ref().unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(w[r.index()] > 0.0);
        }
    }
}
