//! Post-fit analyses: condition contrasts, trajectory bundles and the
//! drift-versus-confidence correlation pipeline.

mod contrasts;
mod correlation;
mod labels;
mod trajectories;

pub use contrasts::{
    condition_posterior_means, effective_scenario_drift, scenario_drifts, ConditionMeans,
    ScenarioDrift,
};
pub use correlation::{
    bootstrap_subject_ci, bootstrap_within_subject_ci, correlation_report, fisher_mean_correlation,
    pearson, percentile, signed_confidence, subject_correlation_set, CorrelationConfig,
    CorrelationReport, CorrelationSet, Exclusion, ExclusionReason, SubjectCorrelation,
    DEFAULT_MIN_TRIALS, DEFAULT_RESAMPLES, MIN_RESAMPLES,
};
pub use labels::{ScenarioLabel, ScenarioLabeling};
pub use trajectories::{
    deterministic_path, simulate_condition_trajectories, PathRecord, TrajectoryBundle,
    TrajectoryMode,
};

use crate::error::{Error, Result};
use crate::sampler::DrawsTable;

pub(crate) fn pooled_column(draws: &DrawsTable, name: &str) -> Result<Vec<f64>> {
    draws
        .index(name)
        .map(|p| draws.pooled(p))
        .ok_or_else(|| Error::Config(format!("draws have no column {name}")))
}

/// Scenario ids with a natural-scale drift offset column `w_v[k]`, ascending.
pub fn scenario_ids(draws: &DrawsTable) -> Vec<u32> {
    let mut ids: Vec<u32> = draws
        .names
        .iter()
        .filter_map(|n| n.strip_prefix("w_v[")?.strip_suffix(']')?.parse().ok())
        .collect();
    ids.sort_unstable();
    ids
}
