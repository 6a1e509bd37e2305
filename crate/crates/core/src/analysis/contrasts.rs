//! Condition-level summaries of scenario effects.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::labels::ScenarioLabeling;
use super::{pooled_column, scenario_ids};
use crate::data::Condition;
use crate::diagnostics::hdi;
use crate::error::{Error, Result};
use crate::math::softplus;
use crate::sampler::DrawsTable;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionMeans {
    /// Mean over member scenarios of the posterior mean of
    /// `beta0_v + w_v[k]`.
    pub v: f64,
    /// Same for `softplus(beta0_a + w_a[k])`.
    pub a: f64,
    pub scenarios: Vec<u32>,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Posterior means of the scenario-level drift and boundary, averaged over
/// the scenarios of each condition. Conditions without scenarios are
/// omitted.
pub fn condition_posterior_means(
    draws: &DrawsTable,
    labels: &ScenarioLabeling,
) -> Result<BTreeMap<Condition, ConditionMeans>> {
    let ids = scenario_ids(draws);
    if ids.is_empty() {
        return Err(Error::Config("draws contain no scenario offsets".into()));
    }
    let b_v = pooled_column(draws, "beta0_v")?;
    let b_a = pooled_column(draws, "beta0_a")?;
    let mut per: BTreeMap<Condition, (Vec<f64>, Vec<f64>, Vec<u32>)> = BTreeMap::new();
    for id in ids {
        let cond = labels.condition(id)?;
        let w_v = pooled_column(draws, &format!("w_v[{id}]"))?;
        let w_a = pooled_column(draws, &format!("w_a[{id}]"))?;
        let v: Vec<f64> = b_v.iter().zip(&w_v).map(|(b, w)| b + w).collect();
        let a: Vec<f64> = b_a.iter().zip(&w_a).map(|(b, w)| softplus(b + w)).collect();
        let e = per.entry(cond).or_default();
        e.0.push(mean(&v));
        e.1.push(mean(&a));
        e.2.push(id);
    }
    Ok(per
        .into_iter()
        .map(|(c, (v, a, s))| {
            (
                c,
                ConditionMeans {
                    v: mean(&v),
                    a: mean(&a),
                    scenarios: s,
                },
            )
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDrift {
    pub mean: f64,
    pub hdi_low: f64,
    pub hdi_high: f64,
}

/// Posterior of `beta0_v + w_v[k]` for scenario `k`: mean and HDI.
pub fn effective_scenario_drift(draws: &DrawsTable, scenario: u32, mass: f64) -> Result<ScenarioDrift> {
    let w = draws
        .index(&format!("w_v[{scenario}]"))
        .ok_or_else(|| Error::Analysis(format!("unknown scenario {scenario}")))?;
    let b = pooled_column(draws, "beta0_v")?;
    let v: Vec<f64> = b.iter().zip(draws.pooled(w)).map(|(b, w)| b + w).collect();
    let (hdi_low, hdi_high) = hdi(&v, mass)?;
    Ok(ScenarioDrift {
        mean: mean(&v),
        hdi_low,
        hdi_high,
    })
}

/// Posterior mean effective drift of every scenario in the draws.
pub fn scenario_drifts(draws: &DrawsTable) -> Result<BTreeMap<u32, f64>> {
    let b = pooled_column(draws, "beta0_v")?;
    scenario_ids(draws)
        .into_iter()
        .map(|id| {
            let w = pooled_column(draws, &format!("w_v[{id}]"))?;
            let v: Vec<f64> = b.iter().zip(&w).map(|(b, w)| b + w).collect();
            Ok((id, mean(&v)))
        })
        .collect()
}
