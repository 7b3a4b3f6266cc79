//! True outcome probabilities for simulation, and what counts as a good pick.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use libm::sqrt;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::regimen::Regimen;
use crate::special::normal_quantile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub alpha_t: Vec<f64>,
    pub alpha_e: Vec<f64>,
    #[serde(default)]
    pub rho: f64,
    pub phi_bound: f64,
    pub psi_bound: f64,
    #[serde(default)]
    pub pi_early: f64,
    /// Safe regimens within this distance of the best safe efficacy also
    /// count as correct. Zero means only the exact maximum.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub efficacy_margin: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

impl Scenario {
    pub fn new(name: impl Into<String>, alpha_t: Vec<f64>, alpha_e: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            alpha_t,
            alpha_e,
            rho: 0.0,
            phi_bound: 0.35,
            psi_bound: 0.20,
            pi_early: 0.0,
            efficacy_margin: 0.0,
        }
    }

    pub fn num_regimens(&self) -> usize {
        self.alpha_t.len()
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_pi_early(mut self, pi: f64) -> Self {
        self.pi_early = pi;
        self
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.alpha_t.len() != self.alpha_e.len() {
            return Err(ScenarioError::LengthMismatch { tox: self.alpha_t.len(), eff: self.alpha_e.len() });
        }
        if !self.alpha_t.iter().copied().all(unit) {
            return Err(ScenarioError::Probability("alpha_t"));
        }
        if !self.alpha_e.iter().copied().all(unit) {
            return Err(ScenarioError::Probability("alpha_e"));
        }
        for (name, v) in [
            ("phi_bound", self.phi_bound),
            ("psi_bound", self.psi_bound),
            ("pi_early", self.pi_early),
            ("efficacy_margin", self.efficacy_margin),
        ] {
            if !unit(v) {
                return Err(ScenarioError::Probability(name));
            }
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(ScenarioError::Correlation);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioEvaluation {
    pub optimal: Option<Regimen>,
    pub correct: Vec<Regimen>,
}

/// Correct regimens are safe (α_t ≤ φ) and reach the highest efficacy among
/// safe regimens, which must itself be at least ψ. The optimal regimen is the
/// least toxic correct one.
pub fn evaluate_scenario(scenario: &Scenario) -> ScenarioEvaluation {
    let safe: Vec<usize> = (0..scenario.num_regimens())
        .filter(|&i| scenario.alpha_t[i] <= scenario.phi_bound)
        .collect();
    let best = safe.iter().map(|&i| scenario.alpha_e[i]).fold(f64::NEG_INFINITY, f64::max);
    if safe.is_empty() || best < scenario.psi_bound {
        return ScenarioEvaluation { optimal: None, correct: Vec::new() };
    }
    let floor = best - scenario.efficacy_margin;
    let correct: Vec<Regimen> = safe
        .into_iter()
        .filter(|&i| scenario.alpha_e[i] >= floor && scenario.alpha_e[i] >= scenario.psi_bound)
        .map(Regimen)
        .collect();
    let optimal = correct.iter().copied().reduce(|a, b| {
        if scenario.alpha_t[b.index()] < scenario.alpha_t[a.index()] {
            b
        } else {
            a
        }
    });
    ScenarioEvaluation { optimal, correct }
}

/// The six toxicity orderings of the middle regimens T3, T4, T5 when T1 ≤ T2
/// are below them and T6 above, in one-based labels.
pub const MIDDLE_ORDERINGS: [[usize; 3]; 6] = [
    [3, 4, 5],
    [3, 5, 4],
    [4, 3, 5],
    [4, 5, 3],
    [5, 3, 4],
    [5, 4, 3],
];

/// Moves the (α_t, α_e) pairs of the middle regimens so that the k-th least
/// toxic of them sits at `ordering[k]`.
///
/// `ordering` lists one-based labels of the regimens strictly between the
/// second and the last; the first two and the last stay in place.
pub fn permute_scenario(scenario: &Scenario, ordering: &[usize]) -> Result<Scenario, ScenarioError> {
    let m = scenario.num_regimens();
    let middle: Vec<usize> = (3..m).collect();
    let mut sorted = ordering.to_vec();
    sorted.sort_unstable();
    if m < 4 || sorted != middle {
        return Err(ScenarioError::InvalidPermutation(format!(
            "{ordering:?} is not a permutation of regimens 3..{}",
            m.saturating_sub(1)
        )));
    }
    let mut out = scenario.clone();
    for (k, &label) in ordering.iter().enumerate() {
        out.alpha_t[label - 1] = scenario.alpha_t[2 + k];
        out.alpha_e[label - 1] = scenario.alpha_e[2 + k];
    }
    Ok(out)
}

/// Normal thresholds for one regimen, so the quantile is computed once per
/// trial rather than once per patient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeThresholds {
    tox: f64,
    eff: f64,
    rho: f64,
    rho_c: f64,
}

impl OutcomeThresholds {
    pub fn new(alpha_t: f64, alpha_e: f64, rho: f64) -> Self {
        Self {
            tox: normal_quantile(alpha_t),
            eff: normal_quantile(alpha_e),
            rho,
            rho_c: sqrt(1.0 - rho * rho),
        }
    }

    pub fn for_scenario(scenario: &Scenario) -> Vec<Self> {
        scenario
            .alpha_t
            .iter()
            .zip(&scenario.alpha_e)
            .map(|(&t, &e)| Self::new(t, e, scenario.rho))
            .collect()
    }

    /// (toxicity, latent efficacy) from a correlated standard normal pair.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (bool, bool) {
        let z1: f64 = rng.sample(StandardNormal);
        let z: f64 = rng.sample(StandardNormal);
        let z2 = self.rho * z1 + self.rho_c * z;
        (z1 <= self.tox, z2 <= self.eff)
    }
}

/// One patient's (toxicity, latent efficacy) at `regimen`. Toxicity is
/// {Z1 ≤ Φ⁻¹(α_t)} and efficacy {Z2 ≤ Φ⁻¹(α_e)} with corr(Z1, Z2) = ρ.
pub fn sample_patient_outcome<R: Rng + ?Sized>(scenario: &Scenario, regimen: Regimen, rng: &mut R) -> (bool, bool) {
    let i = regimen.index();
    OutcomeThresholds::new(scenario.alpha_t[i], scenario.alpha_e[i], scenario.rho).sample(rng)
}
