//! Convergence and model-quality tooling.

mod convergence;
mod interval;
mod loo;
mod ppc;
mod summary;

pub use convergence::{
    autocovariance, basic_rhat, ess_bulk, ess_raw, rank_normalize, split_chains, split_rhat,
    Estimate,
};
pub use interval::{hdi, MIN_HDI_DRAWS};
pub use loo::{
    fit_generalized_pareto, psis_loo, psis_smooth, LooReport, MIN_LOO_DRAWS, PARETO_K_THRESHOLD,
    TAIL_FRACTION,
};
pub use ppc::{posterior_predictive_check, PpcReport, PpcStatistic};
pub use summary::{forest_csv, max_rhat, min_ess, summarize, summary_csv, summary_json, SummaryRow};
