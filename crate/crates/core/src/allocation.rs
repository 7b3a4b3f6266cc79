//! Randomised allocation between the two best regimens.

use alloc::vec;
use alloc::vec::Vec;

use crate::regimen::Regimen;

/// Randomisation weights over all regimens.
///
/// Let m and j be the entries of `admissible` with the smallest and
/// second-smallest trade-off. They receive weights proportional to 1/δ; every
/// other regimen gets 0. A regimen with δ = 0 takes weight 1 outright, and a
/// single admissible regimen takes weight 1. Equal trade-offs resolve to the
/// entry listed first in `admissible`.
pub fn randomization_weights(delta_hats: &[f64], admissible: &[Regimen]) -> Vec<f64> {
    let mut weights = vec![0.0; delta_hats.len()];
    let Some((best, second)) = top_two(delta_hats, admissible) else {
        return weights;
    };
    let d_best = delta_hats[best.index()];
    match second {
        Some(second) if d_best > 0.0 => {
            let d_second = delta_hats[second.index()];
            let inv_best = 1.0 / d_best;
            let inv_second = 1.0 / d_second;
            let w = inv_best / (inv_best + inv_second);
            weights[best.index()] = w;
            weights[second.index()] = 1.0 - w;
        }
        _ => weights[best.index()] = 1.0,
    }
    weights
}

pub(crate) fn top_two(delta_hats: &[f64], admissible: &[Regimen]) -> Option<(Regimen, Option<Regimen>)> {
    let mut best: Option<Regimen> = None;
    let mut second: Option<Regimen> = None;
    for &r in admissible {
        let d = delta_hats[r.index()];
        match best {
            None => best = Some(r),
            Some(b) if d < delta_hats[b.index()] => {
                second = best;
                best = Some(r);
            }
            Some(_) => match second {
                None => second = Some(r),
                Some(s) if d < delta_hats[s.index()] => second = Some(r),
                Some(_) => {}
            },
        }
    }
    best.map(|b| (b, second))
}

/// Picks from `weights` with a uniform draw in [0, 1).
pub(crate) fn pick(weights: &[f64], order: &[Regimen], u: f64) -> Regimen {
    let mut acc = 0.0;
    let mut last = order[0];
    for &r in order {
        let w = weights[r.index()];
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = r;
        if u < acc {
            return r;
        }
    }
    last
}
