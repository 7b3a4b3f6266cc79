//! A live trial: configuration, engine state and the audit log it came from.
//!
//! Every change to the engine state goes through an [`Event`] appended to the
//! audit log, so replaying the log from the configuration must reproduce the
//! stored state exactly. Cohorts are numbered from 1 in everything a session
//! exposes.

use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;
use wedesign_core::{
    replication_rng, AllocationRule, Conclusion, ConfigError, Decision, DecisionTrace, EngineError, Regimen,
    RegimenAssessment, TerminationReason, TrialConfig, TrialState,
};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("revision conflict: expected {expected}, stored {actual}")]
    RevisionConflict { expected: u64, actual: u64 },
    #[error("{0}")]
    Malformed(String),
    #[error("no cohort can be allocated: {0}")]
    Closed(String),
    #[error("audit log does not reproduce the stored state: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Toxicity,
    Efficacy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Allocated {
        cohort: usize,
        regimen: Regimen,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        draw: Option<f64>,
    },
    Toxicity {
        cohort: usize,
        outcomes: Vec<bool>,
    },
    Efficacy {
        cohort: usize,
        outcomes: Vec<Option<bool>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub seq: u64,
    /// Milliseconds since the Unix epoch.
    pub at_ms: u64,
    #[serde(flatten)]
    pub event: Event,
}

/// Outcomes for one cohort and endpoint. Toxicity needs a value for every
/// patient; efficacy uses `null` for patients not being reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeBatch {
    pub cohort: usize,
    pub endpoint: Endpoint,
    pub outcomes: Vec<Option<bool>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendingDraw {
    pub cohort: usize,
    pub draw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// Another cohort can be allocated.
    Open,
    /// The constraints ended the trial early.
    Stopped,
    /// All patients are enrolled.
    Complete,
}

/// What the design says to do next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub revision: u64,
    pub status: Status,
    /// Number of the cohort the recommendation is for, while open.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cohort: Option<usize>,
    /// Regimen for the next cohort, or the final pick once complete.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regimen: Option<Regimen>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<TerminationReason>,
    /// Allocation decision record. Absent once all patients are enrolled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<DecisionTrace>,
    pub regimens: Vec<RegimenAssessment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSession {
    pub id: String,
    pub revision: u64,
    pub config: TrialConfig,
    pub audit: Vec<AuditEntry>,
    /// Decision record behind each allocated cohort, in cohort order.
    pub traces: Vec<DecisionTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending_draw: Option<PendingDraw>,
    pub state: TrialState,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn cohort_index(state: &TrialState, cohort: usize) -> Result<usize, SessionError> {
    match cohort.checked_sub(1) {
        Some(k) if k < state.cohorts().len() => Ok(k),
        _ => Err(EngineError::UnknownCohort(cohort).into()),
    }
}

/// Applies one event to `state`.
pub fn apply_event(state: &mut TrialState, event: &Event) -> Result<(), SessionError> {
    match event {
        Event::Allocated { cohort, regimen, .. } => {
            if *cohort != state.cohorts().len() + 1 {
                return Err(SessionError::Malformed(format!(
                    "cohort {cohort} allocated out of order, expected {}",
                    state.cohorts().len() + 1
                )));
            }
            state.allocate(*regimen)?;
        }
        Event::Toxicity { cohort, outcomes } => {
            let k = cohort_index(state, *cohort)?;
            state.record_cohort_toxicity(k, outcomes)?;
        }
        Event::Efficacy { cohort, outcomes } => {
            let k = cohort_index(state, *cohort)?;
            state.record_efficacy(k, outcomes)?;
        }
    }
    Ok(())
}

/// Rebuilds the engine state from the configuration and the audit log.
pub fn replay(config: &TrialConfig, audit: &[AuditEntry]) -> Result<TrialState, SessionError> {
    let mut state = TrialState::new(config.clone())?;
    for entry in audit {
        apply_event(&mut state, &entry.event)?;
    }
    Ok(state)
}

/// The uniform draw that resolves the randomised choice for `cohort`. It is a
/// function of the configured seed and the cohort number only.
pub fn cohort_draw(config: &TrialConfig, cohort: usize) -> f64 {
    replication_rng(config.rng_seed, cohort as u64).random()
}

impl TrialSession {
    pub fn create(config: TrialConfig) -> Result<Self, SessionError> {
        let state = TrialState::new(config.clone())?;
        Ok(Self {
            id: Uuid::new_v4().simple().to_string(),
            revision: 0,
            config,
            audit: Vec::new(),
            traces: Vec::new(),
            pending_draw: None,
            state,
        })
    }

    pub fn verify(&self) -> Result<(), SessionError> {
        let rebuilt = replay(&self.config, &self.audit)?;
        if rebuilt != self.state {
            return Err(SessionError::Corrupt(format!("session {}", self.id)));
        }
        if self.traces.len() != self.state.cohorts().len() {
            return Err(SessionError::Corrupt(format!(
                "session {} has {} decision traces for {} cohorts",
                self.id,
                self.traces.len(),
                self.state.cohorts().len()
            )));
        }
        Ok(())
    }

    fn next_cohort(&self) -> usize {
        self.state.cohorts().len() + 1
    }

    /// The draw for the next cohort, reusing a persisted one.
    fn draw(&self) -> Option<f64> {
        if self.config.rule != AllocationRule::WeR {
            return None;
        }
        let cohort = self.next_cohort();
        Some(match self.pending_draw {
            Some(p) if p.cohort == cohort => p.draw,
            _ => cohort_draw(&self.config, cohort),
        })
    }

    /// Persists the draw for the next cohort under the randomised rule.
    /// Returns whether the session changed.
    pub fn fix_draw(&mut self) -> bool {
        let cohort = self.next_cohort();
        match self.draw() {
            Some(draw) if self.pending_draw.map(|p| p.cohort) != Some(cohort) => {
                self.pending_draw = Some(PendingDraw { cohort, draw });
                true
            }
            _ => false,
        }
    }

    fn decide(&self) -> Result<DecisionTrace, EngineError> {
        match self.draw() {
            Some(u) => self.state.select_with_draw(u),
            None => self.state.select_next_cohort(),
        }
    }

    pub fn recommendation(&self) -> Result<Recommendation, SessionError> {
        let regimens = self.state.assessments();
        let base = Recommendation {
            revision: self.revision,
            status: Status::Open,
            cohort: None,
            regimen: None,
            reason: None,
            trace: None,
            regimens,
        };
        if self.state.is_exhausted() || self.state.terminated().is_some() {
            return Ok(match self.state.conclusion()? {
                Conclusion::Recommended(r) => Recommendation { status: Status::Complete, regimen: Some(r), ..base },
                Conclusion::Stopped(reason) => Recommendation { status: Status::Stopped, reason: Some(reason), ..base },
            });
        }
        let trace = self.decide()?;
        Ok(match trace.decision {
            Decision::Allocate(r) => Recommendation {
                cohort: Some(self.next_cohort()),
                regimen: Some(r),
                trace: Some(trace),
                ..base
            },
            Decision::Terminate(reason) => Recommendation {
                status: Status::Stopped,
                reason: Some(reason),
                trace: Some(trace),
                ..base
            },
        })
    }

    fn push(&mut self, event: Event) -> Result<(), SessionError> {
        apply_event(&mut self.state, &event)?;
        self.audit.push(AuditEntry { seq: self.audit.len() as u64 + 1, at_ms: now_ms(), event });
        Ok(())
    }

    /// Turns a batch into events, allocating the next cohort first when the
    /// batch reports its toxicity.
    fn apply_batch(&mut self, batch: &OutcomeBatch) -> Result<(), SessionError> {
        match batch.endpoint {
            Endpoint::Toxicity => {
                let outcomes: Vec<bool> = batch
                    .outcomes
                    .iter()
                    .map(|o| o.ok_or_else(|| SessionError::Malformed("toxicity needs a value for every patient".into())))
                    .collect::<Result<_, _>>()?;
                if batch.cohort == self.next_cohort() {
                    self.allocate_next(outcomes.len())?;
                }
                self.push(Event::Toxicity { cohort: batch.cohort, outcomes })
            }
            Endpoint::Efficacy => {
                self.push(Event::Efficacy { cohort: batch.cohort, outcomes: batch.outcomes.clone() })
            }
        }
    }

    fn allocate_next(&mut self, reported: usize) -> Result<(), SessionError> {
        let size = self.config.cohort_size as usize;
        if reported != size {
            return Err(EngineError::OutcomeCount { cohort: self.next_cohort(), expected: size, got: reported }.into());
        }
        let trace = self.decide()?;
        let regimen = match trace.decision {
            Decision::Allocate(r) => r,
            Decision::Terminate(reason) => {
                let why = match reason {
                    TerminationReason::Safety => "safety",
                    TerminationReason::Futility => "futility",
                };
                return Err(SessionError::Closed(format!("the design stops the trial for {why}")));
            }
        };
        let draw = trace.draw;
        self.push(Event::Allocated { cohort: self.next_cohort(), regimen, draw })?;
        self.traces.push(trace);
        self.pending_draw = None;
        Ok(())
    }

    /// Records outcomes if `expected_revision` matches, all or nothing.
    pub fn post_outcomes(&mut self, batch: &OutcomeBatch, expected_revision: u64) -> Result<Recommendation, SessionError> {
        if expected_revision != self.revision {
            return Err(SessionError::RevisionConflict { expected: expected_revision, actual: self.revision });
        }
        let mut next = self.clone();
        next.apply_batch(batch)?;
        next.revision += 1;
        *self = next;
        self.recommendation()
    }

    /// The recommendation that would follow the hypothetical batches, leaving
    /// the session untouched.
    pub fn whatif(&self, batches: &[OutcomeBatch]) -> Result<Recommendation, SessionError> {
        let mut scratch = self.clone();
        for b in batches {
            scratch.apply_batch(b)?;
        }
        let mut rec = scratch.recommendation()?;
        rec.revision = self.revision;
        Ok(rec)
    }
}
