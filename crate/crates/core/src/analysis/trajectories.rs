//! Accumulator trajectories for each condition, either as simulated Wiener
//! paths under posterior uncertainty or as the noiseless mean path.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::contrasts::condition_posterior_means;
use super::labels::ScenarioLabeling;
use super::pooled_column;
use crate::data::Condition;
use crate::error::{Error, Result};
use crate::exec::{stream_rng, Exec};
use crate::math::{logistic, softplus};
use crate::sampler::DrawsTable;
use crate::wiener::{simulate_path_with, Boundary, DdmParams, EulerSettings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryMode {
    Stochastic,
    Deterministic,
}

impl std::str::FromStr for TrajectoryMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "stochastic" => Ok(TrajectoryMode::Stochastic),
            "deterministic" => Ok(TrajectoryMode::Deterministic),
            other => Err(format!("unknown trajectory mode {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub id: usize,
    pub params: DdmParams,
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub outcome: Option<Boundary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBundle {
    pub condition: Condition,
    pub mode: TrajectoryMode,
    pub paths: Vec<PathRecord>,
}

impl TrajectoryBundle {
    /// Fraction of paths ending at `boundary`.
    pub fn fraction(&self, boundary: Boundary) -> f64 {
        let hits = self.paths.iter().filter(|p| p.outcome == Some(boundary)).count();
        hits as f64 / self.paths.len().max(1) as f64
    }

    /// Long-format CSV: `path_id,t,x,outcome`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["path_id", "t", "x", "outcome"])?;
        for p in &self.paths {
            let outcome = match p.outcome {
                Some(Boundary::Lower) => "lower",
                Some(Boundary::Upper) => "upper",
                None => "censored",
            };
            for (t, x) in p.times.iter().zip(&p.states) {
                w.write_record([p.id.to_string(), format!("{t:.6}"), format!("{x:.6}"), outcome.into()])?;
            }
        }
        Ok(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?)
    }
}

/// Straight line `z a + v (t - t0)` sampled every `dt`, ending exactly at
/// the first boundary it meets (or at `max_t`).
pub fn deterministic_path(params: &DdmParams, dt: f64, max_t: f64) -> PathRecord {
    let x0 = params.start();
    let (crossing, outcome) = if params.v > 0.0 {
        (params.t0 + (params.a - x0) / params.v, Some(Boundary::Upper))
    } else if params.v < 0.0 {
        (params.t0 + x0 / -params.v, Some(Boundary::Lower))
    } else {
        (f64::INFINITY, None)
    };
    let end = crossing.min(max_t);
    let outcome = if crossing <= max_t { outcome } else { None };
    let n = ((end - params.t0) / dt).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|i| params.t0 + i as f64 * dt).collect();
    if times.last().is_some_and(|&t| t < end) {
        times.push(end);
    }
    let states = times
        .iter()
        .map(|&t| {
            let x = x0 + params.v * (t - params.t0);
            x.clamp(0.0, params.a)
        })
        .collect();
    PathRecord {
        id: 0,
        params: *params,
        times,
        states,
        outcome,
    }
}

/// Trajectory bundle for one condition.
///
/// Stochastic: path `i` takes a random posterior draw and a random scenario
/// of the condition (population intercepts plus that scenario's offsets)
/// and simulates a Wiener path with random stream `i`. Deterministic: one
/// mean path from the posterior-mean condition parameters.
pub fn simulate_condition_trajectories(
    draws: &DrawsTable,
    labels: &ScenarioLabeling,
    condition: Condition,
    n: usize,
    mode: TrajectoryMode,
    settings: &EulerSettings,
    seed: u64,
    exec: Exec,
) -> Result<TrajectoryBundle> {
    let members: Vec<u32> = labels
        .members(condition)
        .into_iter()
        .filter(|id| draws.index(&format!("w_v[{id}]")).is_some())
        .collect();
    if members.is_empty() {
        return Err(Error::Analysis(format!("no fitted scenarios labelled {condition}")));
    }
    let b_v = pooled_column(draws, "beta0_v")?;
    let b_a = pooled_column(draws, "beta0_a")?;
    let b_t = pooled_column(draws, "beta0_t")?;
    let b_z = pooled_column(draws, "beta0_z")?;

    let paths = match mode {
        TrajectoryMode::Deterministic => {
            let means = condition_posterior_means(draws, labels)?;
            let m = &means[&condition];
            let avg = |x: &[f64], f: fn(f64) -> f64| x.iter().map(|&b| f(b)).sum::<f64>() / x.len() as f64;
            let params = DdmParams::new(m.v, m.a, avg(&b_z, logistic), avg(&b_t, softplus))?;
            vec![deterministic_path(&params, settings.dt, settings.max_t)]
        }
        TrajectoryMode::Stochastic => {
            let offsets: Vec<(Vec<f64>, Vec<f64>)> = members
                .iter()
                .map(|id| {
                    Ok((
                        pooled_column(draws, &format!("w_v[{id}]"))?,
                        pooled_column(draws, &format!("w_a[{id}]"))?,
                    ))
                })
                .collect::<Result<_>>()?;
            let n_draws = b_v.len();
            exec.map_range(n, |i| {
                let mut rng = stream_rng(seed, i as u64);
                let d = rng.random_range(0..n_draws);
                let (w_v, w_a) = &offsets[rng.random_range(0..offsets.len())];
                let params = DdmParams::new(
                    b_v[d] + w_v[d],
                    softplus(b_a[d] + w_a[d]),
                    logistic(b_z[d]),
                    softplus(b_t[d]),
                )?;
                let traj = simulate_path_with(&params, settings, &mut rng)?;
                Ok(PathRecord {
                    id: i,
                    params,
                    times: traj.times,
                    states: traj.states,
                    outcome: traj.outcome,
                })
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(TrajectoryBundle {
        condition,
        mode,
        paths,
    })
}
