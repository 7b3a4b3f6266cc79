//! Scenario and configuration files shipped with the crate.

use wedesign_core::{Scenario, TrialConfig};

macro_rules! scenario_files {
    ($($n:literal),*) => {
        [$(include_str!(concat!("../fixtures/scenarios/scenario-", $n, ".json"))),*]
    };
}

const SCENARIOS: [&str; 14] =
    scenario_files!("01", "02", "03", "04", "05", "06", "07", "08", "09", "10", "11", "12", "13", "14");

const ILLUSTRATION: &str = include_str!("../fixtures/scenarios/illustration.json");

/// Trial configurations by name.
pub const CONFIGS: [(&str, &str); 4] = [
    ("illustration", include_str!("../fixtures/configs/illustration.json")),
    ("motivating", include_str!("../fixtures/configs/motivating.json")),
    ("single-agent", include_str!("../fixtures/configs/single-agent.json")),
    ("single-agent-randomized", include_str!("../fixtures/configs/single-agent-randomized.json")),
];

/// Scenario `n` of the fourteen shipped scenarios, numbered from 1.
pub fn scenario(n: usize) -> Scenario {
    assert!((1..=14).contains(&n), "scenarios are numbered 1 to 14");
    serde_json::from_str(SCENARIOS[n - 1]).expect("shipped scenario parses")
}

pub fn scenarios() -> Vec<Scenario> {
    (1..=14).map(scenario).collect()
}

/// The six-regimen plateau example with a misordered T3.
pub fn illustration_scenario() -> Scenario {
    serde_json::from_str(ILLUSTRATION).expect("shipped scenario parses")
}

pub fn config(name: &str) -> Option<TrialConfig> {
    CONFIGS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| serde_json::from_str(text).expect("shipped config parses"))
}

/// Non-randomised design with unconstrained allocation and illustration priors.
pub fn illustration_config() -> TrialConfig {
    config("illustration").unwrap()
}

/// Calibrated three-chain combination-schedule design, N = 36.
pub fn motivating_config() -> TrialConfig {
    config("motivating").unwrap()
}

/// Single-agent design, N = 60 in cohorts of 3.
pub fn single_agent_config() -> TrialConfig {
    config("single-agent").unwrap()
}

pub fn single_agent_randomized_config() -> TrialConfig {
    config("single-agent-randomized").unwrap()
}
