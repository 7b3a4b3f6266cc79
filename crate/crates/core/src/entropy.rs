//! Weighted and standard differential entropy of the Dirichlet posterior over
//! the three outcome probabilities.
//!
//! With posterior f = Dir(a), a_i = x_i + v_i + 1, and weight
//! φ(p) ∝ Π p_i^{γ_i √n}, the product φ·f is the density Dir(b) with
//! b_i = a_i + γ_i √n. The weighted entropy is then a cross-entropy and
//!
//! ```text
//! h^φ(f) - h(f) = Σ_i (a_i - 1) [ψ(a_i) - ψ(a0) - ψ(b_i) + ψ(b0)]
//! ```
//!
//! As n grows this tends to δ(θ, γ)/2, half the trade-off. The constant factor
//! does not change which regimen minimises the trade-off.

use libm::sqrt;

use crate::error::DomainError;
use crate::special::digamma;
use crate::tradeoff::OutcomeTriple;

/// Observed outcome counts and prior parameters of the Dirichlet posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletCounts {
    pub counts: [u64; 3],
    pub prior: [f64; 3],
}

impl DirichletCounts {
    pub fn new(counts: [u64; 3], prior: [f64; 3]) -> Result<Self, DomainError> {
        if prior.iter().any(|&v| !(v > 0.0)) {
            return Err(DomainError::NonPositiveShape);
        }
        Ok(Self { counts, prior })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Posterior shape parameters a_i = x_i + v_i + 1.
    pub fn shapes(&self) -> [f64; 3] {
        let mut a = [0.0; 3];
        for i in 0..3 {
            a[i] = self.counts[i] as f64 + self.prior[i] + 1.0;
        }
        a
    }
}

/// h^φ(f_n) − h(f_n) for the given posterior and targets, weight exponents γ_i √n.
pub fn entropy_difference(
    counts: &DirichletCounts,
    targets: &OutcomeTriple,
    n: u64,
) -> Result<f64, DomainError> {
    let root = sqrt(n as f64);
    let g = targets.components();
    let exponents = [g[0] * root, g[1] * root, g[2] * root];
    dirichlet_weighted_entropy_gap(counts.shapes(), exponents)
}

/// Weighted-minus-standard entropy of Dir(shapes) under the weight Π p_i^{exponents_i}.
pub fn dirichlet_weighted_entropy_gap(shapes: [f64; 3], exponents: [f64; 3]) -> Result<f64, DomainError> {
    if shapes.iter().any(|&a| !(a > 0.0)) {
        return Err(DomainError::NonPositiveShape);
    }
    let mut b = [0.0; 3];
    for i in 0..3 {
        b[i] = shapes[i] + exponents[i];
        if !(b[i] > 0.0) {
            return Err(DomainError::NonPositiveShape);
        }
    }
    let a0: f64 = shapes.iter().sum();
    let b0: f64 = b.iter().sum();
    let psi_a0 = digamma(a0);
    let psi_b0 = digamma(b0);
    let mut total = 0.0;
    for i in 0..3 {
        total += (shapes[i] - 1.0) * (digamma(shapes[i]) - psi_a0 - digamma(b[i]) + psi_b0);
    }
    Ok(total)
}
