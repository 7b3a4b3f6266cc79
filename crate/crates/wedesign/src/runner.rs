//! Parallel replication of simulated trials.
//!
//! Replication r always uses the stream seeded by (base_seed, r), and the
//! aggregate is a sum of integer counts, so the result does not depend on how
//! many lanes run or how work is split between them.

use rayon::prelude::*;
use wedesign_core::simulate::{equal_allocation_trial, replication_rng, simulate_replication};
use wedesign_core::{
    EqualAllocationCharacteristics, OperatingCharacteristics, Scenario, SimulationError, TrialConfig, TrialState,
};

/// Parallelism for a batch run. `None` uses rayon's global pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Lanes(pub Option<usize>);

impl Lanes {
    pub fn global() -> Self {
        Self(None)
    }

    pub fn fixed(n: usize) -> Self {
        Self(Some(n.max(1)))
    }

    fn install<T: Send>(self, job: impl FnOnce() -> T + Send) -> T {
        match self.0 {
            None => job(),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("thread pool")
                .install(job),
        }
    }
}

fn preflight(config: &TrialConfig, scenario: &Scenario) -> Result<(), SimulationError> {
    TrialState::new(config.clone())?;
    scenario.validate()?;
    if scenario.num_regimens() != config.num_regimens {
        return Err(wedesign_core::ScenarioError::DimensionMismatch {
            expected: config.num_regimens,
            got: scenario.num_regimens(),
        }
        .into());
    }
    Ok(())
}

/// Runs `replications` independent trials and aggregates their operating
/// characteristics.
pub fn run_replications(
    config: &TrialConfig,
    scenario: &Scenario,
    replications: u64,
    base_seed: u64,
    lanes: Lanes,
) -> Result<OperatingCharacteristics, SimulationError> {
    preflight(config, scenario)?;
    let m = config.num_regimens;
    lanes.install(|| {
        (0..replications)
            .into_par_iter()
            .try_fold(
                || OperatingCharacteristics::new(m),
                |mut oc, r| {
                    oc.record(&simulate_replication(config, scenario, base_seed, r)?);
                    Ok(oc)
                },
            )
            .try_reduce(|| OperatingCharacteristics::new(m), |a, b| Ok(a.merge(&b)))
    })
}

/// Equal allocation of N/M patients per regimen with the pick made at the
/// end, reported with and without the terminal constraints.
pub fn equal_allocation_comparator(
    config: &TrialConfig,
    scenario: &Scenario,
    replications: u64,
    base_seed: u64,
    lanes: Lanes,
) -> Result<EqualAllocationCharacteristics, SimulationError> {
    preflight(config, scenario)?;
    let m = config.num_regimens;
    lanes.install(|| {
        (0..replications)
            .into_par_iter()
            .try_fold(
                || EqualAllocationCharacteristics::new(m),
                |mut acc, r| {
                    let mut rng = replication_rng(base_seed, r);
                    acc.record(&equal_allocation_trial(config, scenario, &mut rng)?);
                    Ok(acc)
                },
            )
            .try_reduce(|| EqualAllocationCharacteristics::new(m), |a, b| Ok(a.merge(&b)))
    })
}
