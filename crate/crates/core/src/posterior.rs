//! Beta posterior for a single binary endpoint at one regimen.
//!
//! The prior B(ν + 1, β − ν + 1) has mode ν/β; after x events in n patients the
//! posterior is B(x + ν + 1, n − x + β − ν + 1) with mode (x + ν)/(n + β).

use serde::{Deserialize, Serialize};

use crate::error::DomainError;
use crate::special::regularized_incomplete_beta;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrior")]
pub struct BetaPrior {
    nu: f64,
    beta: f64,
}

#[derive(Deserialize)]
struct RawPrior {
    nu: f64,
    beta: f64,
}

impl TryFrom<RawPrior> for BetaPrior {
    type Error = DomainError;

    fn try_from(raw: RawPrior) -> Result<Self, Self::Error> {
        BetaPrior::new(raw.nu, raw.beta)
    }
}

impl BetaPrior {
    pub fn new(nu: f64, beta: f64) -> Result<Self, DomainError> {
        if nu > 0.0 && nu < beta && beta.is_finite() {
            Ok(Self { nu, beta })
        } else {
            Err(DomainError::InvalidPrior)
        }
    }

    /// Prior with the given mode and unit pseudo-sample weight.
    pub fn with_mode(mode: f64) -> Result<Self, DomainError> {
        Self::new(mode, 1.0)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean_rate(&self) -> f64 {
        self.nu / self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPosterior {
    prior: BetaPrior,
    events: u32,
    trials: u32,
}

impl BetaPosterior {
    pub fn new(prior: BetaPrior, events: u32, trials: u32) -> Result<Self, DomainError> {
        if events > trials {
            return Err(DomainError::EventsExceedTrials);
        }
        Ok(Self { prior, events, trials })
    }

    pub fn events(&self) -> u32 {
        self.events
    }

    pub fn trials(&self) -> u32 {
        self.trials
    }

    /// Shape parameters (a, b) of the posterior Beta density.
    pub fn shape(&self) -> (f64, f64) {
        let x = self.events as f64;
        let n = self.trials as f64;
        (x + self.prior.nu + 1.0, n - x + self.prior.beta - self.prior.nu + 1.0)
    }

    pub fn mode(&self) -> f64 {
        posterior_mode(self)
    }

    pub fn tail(&self, threshold: f64) -> f64 {
        beta_tail(self, threshold)
    }
}

/// Posterior mode (x + ν)/(n + β).
pub fn posterior_mode(post: &BetaPosterior) -> f64 {
    (post.events as f64 + post.prior.nu) / (post.trials as f64 + post.prior.beta)
}

/// Posterior probability that the rate exceeds `threshold`.
pub fn beta_tail(post: &BetaPosterior, threshold: f64) -> f64 {
    let (a, b) = post.shape();
    beta_tail_shape(a, b, threshold)
}

/// P(p > threshold) for p ~ Beta(a, b).
pub fn beta_tail_shape(a: f64, b: f64, threshold: f64) -> f64 {
    if threshold <= 0.0 {
        return 1.0;
    }
    if threshold >= 1.0 {
        return 0.0;
    }
    1.0 - regularized_incomplete_beta(a, b, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn post(x: u32, n: u32, nu: f64, beta: f64) -> BetaPosterior {
        BetaPosterior::new(BetaPrior::new(nu, beta).unwrap(), x, n).unwrap()
    }

    #[test]
    fn prior_validation() {
        assert!(BetaPrior::new(0.0, 1.0).is_err());
        assert!(BetaPrior::new(1.0, 1.0).is_err());
        assert!(BetaPrior::new(1.5, 1.0).is_err());
        assert!(BetaPrior::new(0.3, 1.0).is_ok());
        assert!(BetaPosterior::new(BetaPrior::new(0.3, 1.0).unwrap(), 3, 2).is_err());
    }

    #[test]
    fn modes() {
        assert!((post(0, 0, 0.10, 1.0).mode() - 0.10).abs() < 1e-15);
        assert!((post(1, 2, 0.10, 1.0).mode() - 0.366_667).abs() < 1e-6);
        assert!((post(0, 5, 0.10, 1.0).mode() - 0.016_667).abs() < 1e-6);
    }

    #[test]
    fn tails() {
        assert!((beta_tail_shape(1.0, 1.0, 0.4) - 0.6).abs() < 1e-14);
        assert_eq!(beta_tail_shape(3.0, 7.0, 0.0), 1.0);
        assert_eq!(beta_tail_shape(3.0, 7.0, 1.0), 0.0);
        // ∫_{0.5}^1 12 p (1-p)^2 dp = 5/16
        assert!((beta_tail_shape(2.0, 3.0, 0.5) - 0.3125).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn mode_inside_and_monotone(n in 0u32..200, frac in 0.0f64..1.0, nu in 0.01f64..0.99) {
            let x = ((n as f64) * frac) as u32;
            let m = post(x, n, nu, 1.0).mode();
            prop_assert!(m > 0.0 && m < 1.0);
            if x < n {
                prop_assert!(post(x + 1, n, nu, 1.0).mode() >= m);
            }
        }

        #[test]
        fn tail_monotone_in_events(n in 1u32..80, frac in 0.0f64..1.0, nu in 0.01f64..0.99, t in 0.01f64..0.99) {
            let x = ((n as f64) * frac) as u32;
            if x < n {
                let lo = post(x, n, nu, 1.0).tail(t);
                let hi = post(x + 1, n, nu, 1.0).tail(t);
                prop_assert!(hi >= lo - 1e-12);
            }
        }
    }
}
