//! Posterior predictive checks: replicate the dataset under posterior draws
//! and compare per-scenario AI-choice proportions and global response-time
//! deciles against the observed values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{stream_rng, Exec};
use crate::model::{HierarchicalModel, ModelTrial};
use crate::sampler::DrawsTable;
use crate::wiener::{draw_first_passage, Boundary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpcStatistic {
    pub name: String,
    pub observed: f64,
    pub replicated_mean: f64,
    pub replicated_low: f64,
    pub replicated_high: f64,
    /// Mid-p: `P(rep > obs) + P(rep = obs) / 2`.
    pub p_value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PpcReport {
    pub n_rep: usize,
    pub statistics: Vec<PpcStatistic>,
}

impl PpcReport {
    /// Fraction of statistics with p-value inside `[lo, hi]`.
    pub fn fraction_within(&self, lo: f64, hi: f64) -> f64 {
        if self.statistics.is_empty() {
            return 1.0;
        }
        let inside = self
            .statistics
            .iter()
            .filter(|s| s.p_value >= lo && s.p_value <= hi)
            .count();
        inside as f64 / self.statistics.len() as f64
    }
}

const DECILES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn statistic_names(model: &HierarchicalModel) -> Vec<String> {
    let mut names: Vec<String> = model
        .scenarios()
        .iter()
        .map(|k| format!("p_ai[{k}]"))
        .collect();
    names.extend(DECILES.iter().map(|p| format!("rt_q{}", (p * 100.0).round())));
    names
}

fn statistics(n_scenarios: usize, trials: &[ModelTrial], outcome: &[(Boundary, f64)]) -> Vec<f64> {
    let mut ai = vec![0.0; n_scenarios];
    let mut count = vec![0.0; n_scenarios];
    for (t, (b, _)) in trials.iter().zip(outcome) {
        count[t.scenario] += 1.0;
        if *b == Boundary::Lower {
            ai[t.scenario] += 1.0;
        }
    }
    let mut out: Vec<f64> = ai
        .iter()
        .zip(&count)
        .map(|(a, c)| if *c > 0.0 { a / c } else { f64::NAN })
        .collect();
    let mut rts: Vec<f64> = outcome.iter().map(|o| o.1).collect();
    rts.sort_by(f64::total_cmp);
    out.extend(DECILES.iter().map(|&p| quantile_sorted(&rts, p)));
    out
}

/// Simulates `n_rep` replicated datasets, each from a posterior draw
/// chosen evenly across the pooled chains, and summarizes them.
///
/// The first `model.dim()` columns of `draws` must be the model's
/// unconstrained coordinates in layout order.
pub fn posterior_predictive_check(
    draws: &DrawsTable,
    model: &HierarchicalModel,
    n_rep: usize,
    seed: u64,
    exec: Exec,
) -> Result<PpcReport> {
    use crate::sampler::LogDensity;
    let names = model.param_names();
    if draws.n_params() < names.len() || draws.names[..names.len()] != names[..] {
        return Err(Error::Config(format!(
            "draws have {} parameters that do not match the model's {} coordinates",
            draws.n_params(),
            names.len()
        )));
    }
    if n_rep == 0 {
        return Ok(PpcReport::default());
    }
    let pooled: Vec<&[f64]> = draws.iter_draws().collect();
    if pooled.is_empty() {
        return Err(Error::Config("no posterior draws".into()));
    }
    let trials = model.trials();
    let n_scen = model.layout().n_scenarios;
    let dim = names.len();

    let observed = statistics(
        n_scen,
        trials,
        &trials.iter().map(|t| (t.choice, t.rt)).collect::<Vec<_>>(),
    );
    let replicated: Vec<Vec<f64>> = exec.map_range(n_rep, |r| {
        let which = r * pooled.len() / n_rep;
        let theta = &pooled[which][..dim];
        let mut rng = stream_rng(seed, r as u64);
        let outcome: Vec<(Boundary, f64)> = trials
            .iter()
            .map(|t| {
                let p = model.trial_params(theta, t);
                draw_first_passage(&p, &mut rng)
            })
            .collect();
        statistics(n_scen, trials, &outcome)
    });

    let mut stats = Vec::new();
    for (i, name) in statistic_names(model).into_iter().enumerate() {
        let obs = observed[i];
        if obs.is_nan() {
            continue;
        }
        let mut reps: Vec<f64> = replicated.iter().map(|r| r[i]).collect();
        let n = reps.len() as f64;
        let greater = reps.iter().filter(|&&x| x > obs).count() as f64;
        let equal = reps.iter().filter(|&&x| x == obs).count() as f64;
        reps.sort_by(f64::total_cmp);
        stats.push(PpcStatistic {
            name,
            observed: obs,
            replicated_mean: reps.iter().sum::<f64>() / n,
            replicated_low: quantile_sorted(&reps, 0.025),
            replicated_high: quantile_sorted(&reps, 0.975),
            p_value: (greater + 0.5 * equal) / n,
        });
    }
    Ok(PpcReport {
        n_rep,
        statistics: stats,
    })
}
