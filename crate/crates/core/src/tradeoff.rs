//! The efficacy–toxicity trade-off function.
//!
//! A regimen's outcome is one of three mutually exclusive events: efficacy
//! without toxicity, neither efficacy nor toxicity, and toxicity. The trade-off
//! between the regimen's outcome probabilities θ and the target probabilities γ
//! is
//!
//! ```text
//! δ(θ, γ) = γ1²/θ1 + γ2²/θ2 + γ3²/θ3 - 1
//! ```
//!
//! which is non-negative, zero only at θ = γ, and diverges as θ approaches the
//! boundary of the simplex.

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

/// Probabilities of (efficacy and no toxicity, no efficacy and no toxicity).
/// The toxicity probability is the implicit remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeTriple {
    p_eff_no_tox: f64,
    p_noeff_no_tox: f64,
}

impl OutcomeTriple {
    pub fn new(p_eff_no_tox: f64, p_noeff_no_tox: f64) -> Result<Self, DomainError> {
        let interior = |p: f64| p > 0.0 && p < 1.0;
        if !interior(p_eff_no_tox) || !interior(p_noeff_no_tox) {
            return Err(DomainError::OutsideSimplex);
        }
        if p_eff_no_tox + p_noeff_no_tox >= 1.0 {
            return Err(DomainError::OutsideSimplex);
        }
        Ok(Self { p_eff_no_tox, p_noeff_no_tox })
    }

    /// Maps marginal toxicity and efficacy rates onto the outcome triple.
    pub fn from_rates(alpha_t: f64, alpha_e: f64) -> Result<Self, DomainError> {
        if !(alpha_t > 0.0 && alpha_t < 1.0 && alpha_e > 0.0 && alpha_e < 1.0) {
            return Err(DomainError::BoundaryRate);
        }
        Self::new((1.0 - alpha_t) * alpha_e, (1.0 - alpha_t) * (1.0 - alpha_e))
    }

    pub fn p_eff_no_tox(&self) -> f64 {
        self.p_eff_no_tox
    }

    pub fn p_noeff_no_tox(&self) -> f64 {
        self.p_noeff_no_tox
    }

    pub fn p_tox(&self) -> f64 {
        1.0 - self.p_eff_no_tox - self.p_noeff_no_tox
    }

    pub fn components(&self) -> [f64; 3] {
        [self.p_eff_no_tox, self.p_noeff_no_tox, self.p_tox()]
    }
}

/// Target toxicity and efficacy rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTargets")]
pub struct TradeoffTargets {
    gamma_t: f64,
    gamma_e: f64,
}

#[derive(Deserialize)]
struct RawTargets {
    gamma_t: f64,
    gamma_e: f64,
}

impl TryFrom<RawTargets> for TradeoffTargets {
    type Error = DomainError;

    fn try_from(raw: RawTargets) -> Result<Self, Self::Error> {
        Self::new(raw.gamma_t, raw.gamma_e)
    }
}

impl TradeoffTargets {
    pub fn new(gamma_t: f64, gamma_e: f64) -> Result<Self, DomainError> {
        // validates the derived triple as well
        OutcomeTriple::from_rates(gamma_t, gamma_e)?;
        Ok(Self { gamma_t, gamma_e })
    }

    pub fn gamma_t(&self) -> f64 {
        self.gamma_t
    }

    pub fn gamma_e(&self) -> f64 {
        self.gamma_e
    }

    pub fn triple(&self) -> OutcomeTriple {
        OutcomeTriple {
            p_eff_no_tox: (1.0 - self.gamma_t) * self.gamma_e,
            p_noeff_no_tox: (1.0 - self.gamma_t) * (1.0 - self.gamma_e),
        }
    }
}

/// Trade-off δ(θ, γ) between a regimen's outcome triple and the target triple.
pub fn delta_from_triple(theta: &OutcomeTriple, gamma: &OutcomeTriple) -> f64 {
    // Σγ²/θ - 1 rewritten as Σ(γ - θ)²/θ, which is exactly zero at θ = γ
    // and never negative in floating point.
    let t = theta.components();
    let g = gamma.components();
    (0..3).map(|i| (g[i] - t[i]) * (g[i] - t[i]) / t[i]).sum()
}

/// Trade-off for a regimen given its toxicity and efficacy rates.
pub fn delta_from_rates(
    alpha_t: f64,
    alpha_e: f64,
    targets: &TradeoffTargets,
) -> Result<f64, DomainError> {
    let theta = OutcomeTriple::from_rates(alpha_t, alpha_e)?;
    Ok(delta_from_triple(&theta, &targets.triple()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn triple(a: f64, b: f64) -> OutcomeTriple {
        OutcomeTriple::new(a, b).unwrap()
    }

    #[test]
    fn identity_gives_zero() {
        let g = triple(0.9801, 0.0099);
        assert_eq!(delta_from_triple(&g, &g), 0.0);
    }

    #[test]
    fn illustration_triple() {
        // 0.9801²/0.595 + 0.0099²/0.255 + 0.01²/0.15 - 1
        let expected = 0.9801f64.powi(2) / 0.595 + 0.0099f64.powi(2) / 0.255 + 0.0001 / 0.15 - 1.0;
        let d = delta_from_triple(&triple(0.595, 0.255), &triple(0.9801, 0.0099));
        assert!((d - expected).abs() < 1e-14);
        assert!((d - 0.615_498).abs() < 1e-6, "{d}");
    }

    #[test]
    fn blow_up_near_zero_efficacy() {
        let d = delta_from_triple(&triple(1e-6, 0.5), &triple(0.9801, 0.0099));
        assert!((d / 9.60595e5 - 1.0).abs() < 1e-5, "{d}");
    }

    #[test]
    fn boundary_inputs_rejected() {
        assert_eq!(OutcomeTriple::new(0.0, 0.5), Err(DomainError::OutsideSimplex));
        assert_eq!(OutcomeTriple::new(0.5, 0.5), Err(DomainError::OutsideSimplex));
        assert_eq!(OutcomeTriple::new(0.3, 1.0), Err(DomainError::OutsideSimplex));
        let g = TradeoffTargets::new(0.01, 0.99).unwrap();
        assert_eq!(delta_from_rates(0.0, 0.5, &g), Err(DomainError::BoundaryRate));
        assert_eq!(delta_from_rates(0.2, 1.0, &g), Err(DomainError::BoundaryRate));
        assert!(TradeoffTargets::new(1.0, 0.5).is_err());
    }

    #[test]
    fn rates_at_target_give_zero() {
        let g = TradeoffTargets::new(0.3, 0.6).unwrap();
        assert!(delta_from_rates(0.3, 0.6, &g).unwrap().abs() < 1e-15);
    }

    #[test]
    fn illustration_rates() {
        let g = TradeoffTargets::new(0.01, 0.99).unwrap();
        let d = delta_from_rates(0.05, 0.10, &g).unwrap();
        assert!((d - 9.114).abs() < 1e-3, "{d}");
    }

    #[test]
    fn motivating_vector_ordering() {
        let g = TradeoffTargets::new(0.01, 0.99).unwrap();
        let at = [0.05, 0.10, 0.45, 0.15, 0.30, 0.55];
        let ae = [0.10, 0.40, 0.70, 0.70, 0.70, 0.70];
        let d: Vec<f64> = at.iter().zip(&ae).map(|(&t, &e)| delta_from_rates(t, e, &g).unwrap()).collect();
        let mut idx: Vec<usize> = (0..6).collect();
        idx.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
        assert_eq!(idx[0], 3);
        assert_eq!(idx[1], 4);
    }

    #[test]
    fn divergence_as_efficacy_component_vanishes() {
        let g = triple(0.9801, 0.0099);
        for k in 2..=6 {
            let near = delta_from_triple(&triple(libm::pow(10.0, -(k as f64)), 0.5), &g);
            let far = delta_from_triple(&triple(libm::pow(10.0, -(k as f64) + 1.0), 0.5), &g);
            assert!(near > far);
        }
    }

    fn simplex_point() -> impl Strategy<Value = OutcomeTriple> {
        (0.001f64..0.998, 0.001f64..0.998).prop_filter_map("interior", |(a, b)| {
            // fold into the simplex
            let (a, b) = if a + b < 0.999 { (a, b) } else { (1.0 - a, 1.0 - b) };
            OutcomeTriple::new(a, b).ok().filter(|t| t.p_tox() > 0.0005)
        })
    }

    proptest! {
        #[test]
        fn nonnegative_and_zero_only_at_target(theta in simplex_point(), gamma in simplex_point()) {
            let d = delta_from_triple(&theta, &gamma);
            prop_assert!(d >= 0.0);
            let dist: f64 = theta.components().iter().zip(gamma.components().iter()).map(|(a, b)| (a - b).abs()).sum();
            if dist > 1e-6 {
                prop_assert!(d > 0.0);
            }
            prop_assert_eq!(delta_from_triple(&gamma, &gamma), 0.0);
        }

        #[test]
        fn rates_route_matches_triple_route(t in 0.001f64..0.999, e in 0.001f64..0.999, gt in 0.001f64..0.999, ge in 0.001f64..0.999) {
            let targets = TradeoffTargets::new(gt, ge).unwrap();
            let theta = OutcomeTriple::new((1.0 - t) * e, (1.0 - t) * (1.0 - e)).unwrap();
            let gamma = OutcomeTriple::new((1.0 - gt) * ge, (1.0 - gt) * (1.0 - ge)).unwrap();
            let a = delta_from_rates(t, e, &targets).unwrap();
            let b = delta_from_triple(&theta, &gamma);
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }
}
