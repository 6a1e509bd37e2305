//! Helpers shared by integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use ddm_core::data::{Choice, Condition, TrialRecord};
use ddm_core::exec::stream_rng;
use ddm_core::sampler::{Chain, DrawsTable, TransitionStats};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn record(subject: &str, scenario: u32, slider: u8) -> TrialRecord {
    TrialRecord {
        subject_id: subject.to_string(),
        scenario_id: scenario,
        condition: if scenario % 3 == 0 { Condition::Epistemic } else { Condition::Social },
        choice: if slider < 50 { Choice::Ai } else { Choice::Human },
        rt_ms: 3000,
        slider,
    }
}

/// Effective drifts for scenarios 1..=30, spread over [-2.4, 1.95].
pub fn scenario_drifts() -> BTreeMap<u32, f64> {
    (1..=30).map(|k| (k, -2.4 + 0.15 * (k - 1) as f64)).collect()
}

/// Cohort whose signed confidence is `gain * drift + noise * e`, one trial
/// per subject and scenario.
pub fn correlation_cohort(subjects: usize, gain: f64, noise: f64, seed: u64) -> Vec<TrialRecord> {
    let drifts = scenario_drifts();
    let mut out = Vec::new();
    for j in 0..subjects {
        let mut rng = stream_rng(seed, j as u64);
        for (&k, &v) in &drifts {
            let e: f64 = rng.sample(StandardNormal);
            let y = (gain * v + noise * e).clamp(-1.0, 1.0);
            out.push(record(&format!("P{j:03}"), k, (50.0 + 50.0 * y).round() as u8));
        }
    }
    out
}

/// Pearson r by explicit sums, independent of the library routine.
pub fn direct_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}

/// Fisher-z mean of per-subject correlations computed directly from the
/// records.
pub fn direct_fisher_mean(trials: &[TrialRecord], drifts: &BTreeMap<u32, f64>) -> f64 {
    let mut by: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for t in trials {
        let e = by.entry(&t.subject_id).or_default();
        e.0.push(drifts[&t.scenario_id]);
        e.1.push((t.slider as f64 - 50.0) / 50.0);
    }
    let z: Vec<f64> = by.values().map(|(x, y)| direct_pearson(x, y).atanh()).collect();
    (z.iter().sum::<f64>() / z.len() as f64).tanh()
}

/// Table from per-chain draws `chains[c][i][p]`.
pub fn table(names: &[&str], chains: Vec<Vec<Vec<f64>>>) -> DrawsTable {
    DrawsTable {
        names: names.iter().map(|s| s.to_string()).collect(),
        chains: chains
            .into_iter()
            .map(|draws| Chain {
                stats: vec![TransitionStats::default(); draws.len()],
                draws,
                step_size: 0.1,
                inv_metric: vec![1.0; names.len()],
                warmup_divergences: 0,
            })
            .collect(),
    }
}
