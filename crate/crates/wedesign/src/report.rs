//! CSV output for batch runs and calibration surfaces.
//!
//! Operating characteristics use one fixed header:
//!
//! ```text
//! row,regimen,recommendation_pct,mean_patients,termination_pct,mean_toxicities,mean_efficacies,optimal_pct,correct_pct,replications,seed
//! ```
//!
//! followed by one `regimen` row per regimen (only the first four columns
//! filled) and a final `summary` row (regimen columns empty).

use std::io::Write;

use wedesign_core::{OperatingCharacteristics, Regimen, ScenarioEvaluation};

use crate::calibrate::{ConstraintCell, PriorSurfacePoint};

pub const OC_HEADER: [&str; 11] = [
    "row",
    "regimen",
    "recommendation_pct",
    "mean_patients",
    "termination_pct",
    "mean_toxicities",
    "mean_efficacies",
    "optimal_pct",
    "correct_pct",
    "replications",
    "seed",
];

fn num(x: f64) -> String {
    format!("{x:.4}")
}

pub fn write_oc_csv<W: Write>(
    out: W,
    oc: &OperatingCharacteristics,
    eval: &ScenarioEvaluation,
    seed: u64,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OC_HEADER)?;
    for i in 0..oc.recommendations.len() {
        let r = Regimen(i);
        w.write_record([
            "regimen".to_string(),
            r.to_string(),
            num(oc.recommendation_pct(r)),
            num(oc.mean_patients(r)),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ])?;
    }
    w.write_record([
        "summary".to_string(),
        String::new(),
        String::new(),
        String::new(),
        num(oc.termination_pct()),
        num(oc.mean_toxicities()),
        num(oc.mean_efficacies()),
        num(oc.optimal_pct(eval)),
        num(oc.correct_pct(eval)),
        oc.replications.to_string(),
        seed.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// Long format: one row per (grid point, scenario), plus the objective on
/// every row of its point. Infeasible points get a single row with an empty
/// scenario column.
pub fn write_prior_surface_csv<W: Write>(
    out: W,
    surface: &[PriorSurfacePoint],
    scenario_names: &[String],
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["start_t", "w_t", "start_e", "w_e", "feasible", "scenario", "optimal_pct", "objective"])?;
    for s in surface {
        let p = s.point;
        let axes = [p.start_t, p.w_t, p.start_e, p.w_e].map(|v| v.to_string());
        if !s.feasible {
            w.write_record(axes.iter().cloned().chain(["false".into(), String::new(), String::new(), num(0.0)]))?;
            continue;
        }
        for (name, pct) in scenario_names.iter().zip(&s.optimal_pct) {
            w.write_record(axes.iter().cloned().chain(["true".into(), name.clone(), num(*pct), num(s.objective)]))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_constraint_surface_csv<W: Write>(out: W, cells: &[ConstraintCell]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["threshold", "rate", "scenario", "correct_pct", "termination_pct", "mean_patients"])?;
    for c in cells {
        w.write_record([
            c.threshold.to_string(),
            c.rate.to_string(),
            c.scenario.clone(),
            num(c.correct_pct),
            num(c.termination_pct),
            num(c.mean_patients),
        ])?;
    }
    w.flush()?;
    Ok(())
}
