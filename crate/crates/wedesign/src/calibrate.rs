//! Grid searches over prior and constraint parameters.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wedesign_core::{
    evaluate_scenario, linear_priors, FutilitySchedule, Regimen, SafetySchedule, Scenario, SimulationError,
    TrialConfig, TrialState,
};

use crate::runner::{run_replications, Lanes};

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("calibration grid has an empty axis: {0}")]
    EmptyAxis(&'static str),
    #[error("no grid point yields a feasible design")]
    AllInfeasible,
    #[error("scenario {0} has no optimal regimen")]
    NoOptimal(String),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

/// Candidate values for linear priors ν_i = start + w·i, i = 1..=M.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorGrid {
    pub start_t: Vec<f64>,
    pub w_t: Vec<f64>,
    pub start_e: Vec<f64>,
    pub w_e: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorPoint {
    pub start_t: f64,
    pub w_t: f64,
    pub start_e: f64,
    pub w_e: f64,
}

impl PriorGrid {
    pub fn points(&self) -> Result<Vec<PriorPoint>, CalibrationError> {
        for (name, axis) in [
            ("start_t", &self.start_t),
            ("w_t", &self.w_t),
            ("start_e", &self.start_e),
            ("w_e", &self.w_e),
        ] {
            if axis.is_empty() {
                return Err(CalibrationError::EmptyAxis(name));
            }
        }
        let mut out = Vec::new();
        for &start_t in &self.start_t {
            for &w_t in &self.w_t {
                for &start_e in &self.start_e {
                    for &w_e in &self.w_e {
                        out.push(PriorPoint { start_t, w_t, start_e, w_e });
                    }
                }
            }
        }
        Ok(out)
    }
}

impl PriorPoint {
    /// `template` with this point's priors, or `None` if the resulting
    /// design is not usable: a prior outside (0, 1), means not rising along
    /// the orderings, or a first cohort that does not go to the bottom of a
    /// chain.
    pub fn apply(&self, template: &TrialConfig) -> Option<TrialConfig> {
        let m = template.num_regimens;
        let mut cfg = template.clone();
        cfg.tox_priors = linear_priors(self.start_t, self.w_t, m).ok()?;
        cfg.eff_priors = linear_priors(self.start_e, self.w_e, m).ok()?;
        let first = TrialState::new(cfg.clone()).ok()?.select_next_cohort().ok()?.chosen()?;
        let bottoms: Vec<Regimen> = cfg.orderings.iter().filter_map(|o| o.chain().first().copied()).collect();
        if !bottoms.is_empty() && !bottoms.contains(&first) {
            return None;
        }
        Some(cfg)
    }
}

/// Geometric mean of percentages. Zero as soon as any entry is zero.
pub fn geometric_mean(values: &[f64]) -> f64 {
    if values.is_empty() || values.iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSurfacePoint {
    pub point: PriorPoint,
    pub feasible: bool,
    /// Optimal-recommendation percentage per scenario, empty when infeasible.
    pub optimal_pct: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorCalibration {
    pub best: PriorPoint,
    pub best_objective: f64,
    pub surface: Vec<PriorSurfacePoint>,
}

/// Searches the prior grid for the point maximising the geometric mean of
/// optimal-recommendation percentages over `scenarios`. Ties keep the first
/// point in grid order.
pub fn calibrate_priors(
    grid: &PriorGrid,
    scenarios: &[Scenario],
    template: &TrialConfig,
    replications: u64,
    base_seed: u64,
    lanes: Lanes,
) -> Result<PriorCalibration, CalibrationError> {
    let evaluations: Vec<_> = scenarios.iter().map(evaluate_scenario).collect();
    for (s, e) in scenarios.iter().zip(&evaluations) {
        if e.optimal.is_none() {
            return Err(CalibrationError::NoOptimal(s.name.clone()));
        }
    }
    let mut surface = Vec::new();
    let mut best: Option<(PriorPoint, f64)> = None;
    for point in grid.points()? {
        let Some(cfg) = point.apply(template) else {
            surface.push(PriorSurfacePoint { point, feasible: false, optimal_pct: Vec::new(), objective: 0.0 });
            continue;
        };
        let mut optimal_pct = Vec::with_capacity(scenarios.len());
        for (s, e) in scenarios.iter().zip(&evaluations) {
            let oc = run_replications(&cfg, s, replications, base_seed, lanes)?;
            optimal_pct.push(oc.optimal_pct(e));
        }
        let objective = geometric_mean(&optimal_pct);
        if best.is_none_or(|(_, b)| objective > b) {
            best = Some((point, objective));
        }
        surface.push(PriorSurfacePoint { point, feasible: true, optimal_pct, objective });
    }
    let (best, best_objective) = best.ok_or(CalibrationError::AllInfeasible)?;
    Ok(PriorCalibration { best, best_objective, surface })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Safety,
    Futility,
}

/// Threshold (φ* or ψ*) and rate (r_t or r_e) candidates. The terminal level
/// is taken from the template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintGrid {
    pub kind: ConstraintKind,
    pub thresholds: Vec<f64>,
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCell {
    pub threshold: f64,
    pub rate: f64,
    pub scenario: String,
    pub correct_pct: f64,
    pub termination_pct: f64,
    pub mean_patients: f64,
}

/// Evaluates every grid cell on each scenario. There is no automatic pick:
/// the surfaces show how a stricter constraint trades termination in a bad
/// scenario against correct recommendations in a good one.
pub fn calibrate_constraint(
    grid: &ConstraintGrid,
    scenarios: &[Scenario],
    template: &TrialConfig,
    replications: u64,
    base_seed: u64,
    lanes: Lanes,
) -> Result<Vec<ConstraintCell>, CalibrationError> {
    if grid.thresholds.is_empty() {
        return Err(CalibrationError::EmptyAxis("thresholds"));
    }
    if grid.rates.is_empty() {
        return Err(CalibrationError::EmptyAxis("rates"));
    }
    let mut cells = Vec::new();
    for &threshold in &grid.thresholds {
        for &rate in &grid.rates {
            let mut cfg = template.clone();
            match grid.kind {
                ConstraintKind::Safety => cfg.safety = SafetySchedule::new(threshold, cfg.safety.zeta_n, rate),
                ConstraintKind::Futility => cfg.futility = FutilitySchedule::new(threshold, cfg.futility.xi_n, rate),
            }
            for s in scenarios {
                let oc = run_replications(&cfg, s, replications, base_seed, lanes)?;
                let patients: f64 = (0..cfg.num_regimens).map(|i| oc.mean_patients(Regimen(i))).sum();
                cells.push(ConstraintCell {
                    threshold,
                    rate,
                    scenario: s.name.clone(),
                    correct_pct: oc.correct_pct(&evaluate_scenario(s)),
                    termination_pct: oc.termination_pct(),
                    mean_patients: patients,
                });
            }
        }
    }
    Ok(cells)
}
