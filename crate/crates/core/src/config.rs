//! Trial configuration: design parameters fixed before the first patient.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, DomainError};
use crate::posterior::BetaPrior;
use crate::regimen::Regimen;
use crate::tradeoff::TradeoffTargets;

/// A chain of regimens whose toxicity is known to be nondecreasing along it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartialOrdering {
    chain: Vec<Regimen>,
}

impl PartialOrdering {
    pub fn new(chain: Vec<Regimen>) -> Self {
        Self { chain }
    }

    /// Chain given as one-based labels, e.g. `[1, 2, 3, 6]`.
    pub fn from_labels(labels: &[usize]) -> Self {
        Self {
            chain: labels.iter().map(|&l| Regimen(l - 1)).collect(),
        }
    }

    pub fn chain(&self) -> &[Regimen] {
        &self.chain
    }

    pub fn position(&self, regimen: Regimen) -> Option<usize> {
        self.chain.iter().position(|&r| r == regimen)
    }

    /// The regimen directly below `regimen` in this chain.
    pub fn predecessor(&self, regimen: Regimen) -> Option<Regimen> {
        match self.position(regimen) {
            Some(pos) if pos > 0 => Some(self.chain[pos - 1]),
            _ => None,
        }
    }
}

/// Time-varying overdose control: regimen i is safe while
/// P(toxicity rate > φ*) ≤ ζ(n_i) with ζ(n) = max(1 − r_t·n, ζ_N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetySchedule {
    pub phi_star: f64,
    pub zeta_n: f64,
    pub r_t: f64,
}

impl SafetySchedule {
    pub fn new(phi_star: f64, zeta_n: f64, r_t: f64) -> Self {
        Self { phi_star, zeta_n, r_t }
    }

    /// A schedule that never excludes a regimen.
    pub fn disabled() -> Self {
        Self { phi_star: 0.5, zeta_n: 1.0, r_t: 0.0 }
    }

    pub fn level(&self, n: u32) -> f64 {
        let linear = 1.0 - self.r_t * n as f64;
        if linear > self.zeta_n {
            linear
        } else {
            self.zeta_n
        }
    }
}

/// Time-varying futility control: regimen i is efficacious while
/// P(efficacy rate > ψ*) ≥ ξ(n_i) with ξ(n) = min(r_e·n, ξ_N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FutilitySchedule {
    pub psi_star: f64,
    pub xi_n: f64,
    pub r_e: f64,
}

impl FutilitySchedule {
    pub fn new(psi_star: f64, xi_n: f64, r_e: f64) -> Self {
        Self { psi_star, xi_n, r_e }
    }

    pub fn disabled() -> Self {
        Self { psi_star: 0.5, xi_n: 0.0, r_e: 0.0 }
    }

    pub fn level(&self, n: u32) -> f64 {
        let linear = self.r_e * n as f64;
        if linear < self.xi_n {
            linear
        } else {
            self.xi_n
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AllocationRule {
    /// Allocate to the regimen minimising the estimated trade-off.
    #[serde(rename = "WE")]
    We,
    /// Randomise between the two best regimens, weights ∝ 1/δ.
    #[serde(rename = "WE_R")]
    WeR,
}

/// Which patients enter the efficacy posterior of a regimen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EfficacyDenominator {
    /// Only non-toxic patients whose efficacy outcome has been reported.
    #[default]
    NonToxic,
    /// Every patient whose efficacy status is settled. A toxicity settles it
    /// as a failure, since efficacy without toxicity can no longer occur.
    Settled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    #[serde(alias = "M")]
    pub num_regimens: usize,
    #[serde(alias = "N")]
    pub max_patients: u32,
    #[serde(alias = "c")]
    pub cohort_size: u32,
    pub targets: TradeoffTargets,
    pub tox_priors: Vec<BetaPrior>,
    pub eff_priors: Vec<BetaPrior>,
    pub orderings: Vec<PartialOrdering>,
    #[serde(alias = "q")]
    pub coherence_threshold: u32,
    pub safety: SafetySchedule,
    pub futility: FutilitySchedule,
    pub rule: AllocationRule,
    #[serde(default)]
    pub efficacy_denominator: EfficacyDenominator,
    #[serde(default)]
    pub rng_seed: u64,
}

/// Priors whose modes rise linearly: mode_i = start + step·i for i = 1..=m,
/// each with unit pseudo-sample weight.
pub fn linear_priors(start: f64, step: f64, m: usize) -> Result<Vec<BetaPrior>, DomainError> {
    (1..=m).map(|i| BetaPrior::with_mode(start + step * i as f64)).collect()
}

/// Priors with unit pseudo-sample weight and the given modes.
pub fn priors_from_modes(modes: &[f64]) -> Result<Vec<BetaPrior>, DomainError> {
    modes.iter().map(|&m| BetaPrior::with_mode(m)).collect()
}

impl TrialConfig {
    pub fn num_cohorts(&self) -> usize {
        (self.max_patients / self.cohort_size) as usize
    }

    /// Checks every configuration invariant and reports all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems: Vec<String> = Vec::new();
        let m = self.num_regimens;
        if m < 2 {
            problems.push(format!("at least 2 regimens required, got {m}"));
        }
        if self.cohort_size == 0 {
            problems.push("cohort size must be positive".into());
        } else if self.max_patients % self.cohort_size != 0 {
            problems.push(format!(
                "maximum sample size {} is not divisible by cohort size {}",
                self.max_patients, self.cohort_size
            ));
        }
        if self.max_patients == 0 {
            problems.push("maximum sample size must be positive".into());
        }
        if self.tox_priors.len() != m {
            problems.push(format!("expected {m} toxicity priors, got {}", self.tox_priors.len()));
        }
        if self.eff_priors.len() != m {
            problems.push(format!("expected {m} efficacy priors, got {}", self.eff_priors.len()));
        }
        for (kind, priors) in [("toxicity", &self.tox_priors), ("efficacy", &self.eff_priors)] {
            for (i, p) in priors.iter().enumerate() {
                if BetaPrior::new(p.nu(), p.beta()).is_err() {
                    problems.push(format!("{kind} prior of T{} violates 0 < nu < beta", i + 1));
                }
            }
        }
        if self.coherence_threshold == 0 {
            problems.push("coherence threshold q must be at least 1".into());
        }
        for (k, ordering) in self.orderings.iter().enumerate() {
            let chain = ordering.chain();
            if chain.is_empty() {
                problems.push(format!("ordering {} is empty", k + 1));
            }
            for (pos, r) in chain.iter().enumerate() {
                if r.index() >= m {
                    problems.push(format!("ordering {} names {r}, outside 1..={m}", k + 1));
                }
                if chain[..pos].contains(r) {
                    problems.push(format!("ordering {} repeats {r}", k + 1));
                }
            }
            for (kind, priors) in [("toxicity", &self.tox_priors), ("efficacy", &self.eff_priors)] {
                for pair in chain.windows(2) {
                    let (lo, hi) = (pair[0].index(), pair[1].index());
                    if lo < priors.len() && hi < priors.len() && priors[lo].mean_rate() >= priors[hi].mean_rate() {
                        problems.push(format!(
                            "prior {kind} mean must increase along ordering {} ({} -> {})",
                            k + 1,
                            pair[0],
                            pair[1]
                        ));
                    }
                }
            }
        }
        let s = &self.safety;
        if !(s.phi_star > 0.0 && s.phi_star < 1.0) {
            problems.push("safety threshold phi* must lie in (0, 1)".into());
        }
        if !(s.zeta_n > 0.0 && s.zeta_n <= 1.0) {
            problems.push("terminal safety level zeta_N must lie in (0, 1]".into());
        }
        if !(s.r_t >= 0.0 && s.r_t.is_finite()) {
            problems.push("safety rate r_t must be non-negative".into());
        }
        let f = &self.futility;
        if !(f.psi_star > 0.0 && f.psi_star < 1.0) {
            problems.push("futility threshold psi* must lie in (0, 1)".into());
        }
        if !(f.xi_n >= 0.0 && f.xi_n < 1.0) {
            problems.push("terminal futility level xi_N must lie in [0, 1)".into());
        }
        if !(f.r_e >= 0.0 && f.r_e.is_finite()) {
            problems.push("futility rate r_e must be non-negative".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(problems))
        }
    }
}
