//! Synthetic cohorts drawn from the hierarchical generative model, used for
//! parameter recovery and for exercising the pipeline without human data.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analysis::ScenarioLabeling;
use crate::data::{Choice, Condition, TrialRecord};
use crate::error::{Error, Result};
use crate::exec::{stream_rng, Exec};
use crate::math::{softplus, softplus_inv};
use crate::wiener::{draw_first_passage, DdmParams};

/// Generating parameters. Condition values are natural-scale means over the
/// scenarios of each condition; scenario and subject offsets are drawn and
/// then centred so the realised means equal them exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_subjects: usize,
    pub drift_epistemic: f64,
    pub drift_social: f64,
    pub boundary_epistemic: f64,
    pub boundary_social: f64,
    pub start_point: f64,
    /// Non-decision time in seconds.
    pub non_decision_time: f64,
    pub sd_v_scenario: f64,
    pub sd_v_subject: f64,
    /// On the unconstrained (inverse softplus) boundary scale.
    pub sd_a_scenario: f64,
    pub sd_a_subject: f64,
    /// Slider = 50 + 50 tanh(gain * v + noise * e), rounded.
    pub slider_gain: f64,
    pub slider_noise: f64,
    /// Scenarios whose drift is fixed exactly; the other scenarios of the
    /// same condition absorb the difference so the condition mean holds.
    pub pinned_drift: Vec<PinnedDrift>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinnedDrift {
    pub scenario: u32,
    pub drift: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n_subjects: 30,
            drift_epistemic: -1.26,
            drift_social: 0.70,
            boundary_epistemic: 2.94,
            boundary_social: 3.37,
            start_point: 0.52,
            non_decision_time: 2.4,
            sd_v_scenario: 0.3,
            sd_v_subject: 0.3,
            sd_a_scenario: 0.15,
            sd_a_subject: 0.15,
            slider_gain: 0.8,
            slider_noise: 0.3,
            pinned_drift: Vec::new(),
        }
    }
}

impl SimulationConfig {
    pub fn drift(&self, c: Condition) -> f64 {
        match c {
            Condition::Epistemic => self.drift_epistemic,
            Condition::Social => self.drift_social,
        }
    }

    pub fn boundary(&self, c: Condition) -> f64 {
        match c {
            Condition::Epistemic => self.boundary_epistemic,
            Condition::Social => self.boundary_social,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 {
            return Err(Error::Config("n_subjects must be positive".into()));
        }
        let positive = [
            ("boundary_epistemic", self.boundary_epistemic),
            ("boundary_social", self.boundary_social),
            ("non_decision_time", self.non_decision_time + f64::MIN_POSITIVE),
        ];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {x}")));
            }
        }
        if !(self.start_point > 0.0 && self.start_point < 1.0) {
            return Err(Error::Config(format!("start_point must lie in (0, 1), got {}", self.start_point)));
        }
        let sds = [
            self.sd_v_scenario,
            self.sd_v_subject,
            self.sd_a_scenario,
            self.sd_a_subject,
            self.slider_noise,
        ];
        if sds.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::Config("standard deviations must be finite and non-negative".into()));
        }
        if self.pinned_drift.iter().any(|p| !p.drift.is_finite()) {
            return Err(Error::Config("pinned drifts must be finite".into()));
        }
        Ok(())
    }

    fn pinned(&self, k: u32) -> Option<f64> {
        self.pinned_drift.iter().find(|p| p.scenario == k).map(|p| p.drift)
    }
}

/// Realised generating values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub scenario_v: BTreeMap<u32, f64>,
    /// Natural-scale boundary of each scenario for an average subject.
    pub scenario_a: BTreeMap<u32, f64>,
    pub subject_v: BTreeMap<String, f64>,
    /// Offsets on the unconstrained boundary scale.
    pub subject_a: BTreeMap<String, f64>,
    pub condition_v: BTreeMap<Condition, f64>,
    pub condition_a: BTreeMap<Condition, f64>,
    pub z: f64,
    pub t0: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticData {
    pub records: Vec<TrialRecord>,
    pub truth: SyntheticTruth,
}

fn centred_normals<R: Rng>(n: usize, sd: f64, rng: &mut R) -> Vec<f64> {
    let x: Vec<f64> = (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
    let m = x.iter().sum::<f64>() / n.max(1) as f64;
    x.into_iter().map(|e| e - m).collect()
}

pub fn subject_id(j: usize) -> String {
    format!("S{:03}", j + 1)
}

/// One trial per subject and labelled scenario. Scenario and subject
/// effects use stream 0 of `seed`; subject `j`'s trials use stream `j + 1`.
pub fn simulate_cohort(
    config: &SimulationConfig,
    labels: &ScenarioLabeling,
    seed: u64,
    exec: Exec,
) -> Result<SyntheticData> {
    config.validate()?;
    if labels.is_empty() {
        return Err(Error::Config("no scenarios to simulate".into()));
    }
    for p in &config.pinned_drift {
        let cond = labels.condition(p.scenario)?;
        if labels.members(cond).iter().all(|&k| config.pinned(k).is_some()) {
            return Err(Error::Config(format!(
                "every {} scenario is pinned; the condition mean cannot be kept",
                cond.as_str()
            )));
        }
    }
    let mut rng = stream_rng(seed, 0);
    let mut scenario_v = BTreeMap::new();
    let mut scenario_a = BTreeMap::new();
    for cond in Condition::ALL {
        let members = labels.members(cond);
        let ev = centred_normals(members.len(), config.sd_v_scenario, &mut rng);
        let ea = centred_normals(members.len(), config.sd_a_scenario, &mut rng);
        let free = members.iter().filter(|&&k| config.pinned(k).is_none()).count();
        let pinned_excess: f64 = members
            .iter()
            .filter_map(|&k| config.pinned(k))
            .map(|v| v - config.drift(cond))
            .sum();
        let free_offset: f64 = members
            .iter()
            .zip(&ev)
            .filter(|(k, _)| config.pinned(**k).is_none())
            .map(|(_, e)| e)
            .sum();
        let shift = (free_offset + pinned_excess) / free.max(1) as f64;
        for (i, &k) in members.iter().enumerate() {
            let v = match config.pinned(k) {
                Some(v) => v,
                None => config.drift(cond) + ev[i] - shift,
            };
            scenario_v.insert(k, v);
            scenario_a.insert(k, config.boundary(cond) + ea[i]);
        }
    }
    let n = config.n_subjects;
    let uv = centred_normals(n, config.sd_v_subject, &mut rng);
    let ua = centred_normals(n, config.sd_a_subject, &mut rng);

    let per_subject = exec.map_range(n, |j| -> Result<Vec<TrialRecord>> {
        let mut rng = stream_rng(seed, j as u64 + 1);
        let mut out = Vec::with_capacity(scenario_v.len());
        for (&k, &vk) in &scenario_v {
            let v = vk + uv[j];
            let a = softplus(softplus_inv(scenario_a[&k]) + ua[j]);
            let params = DdmParams::new(v, a, config.start_point, config.non_decision_time)?;
            let (b, rt) = draw_first_passage(&params, &mut rng);
            let e: f64 = rng.sample(StandardNormal);
            let s = 50.0 + 50.0 * (config.slider_gain * v + config.slider_noise * e).tanh();
            out.push(TrialRecord {
                subject_id: subject_id(j),
                scenario_id: k,
                condition: labels.condition(k)?,
                choice: Choice::from_boundary(b),
                rt_ms: ((rt * 1000.0).ceil() as u64).max(1),
                slider: s.round().clamp(0.0, 100.0) as u8,
            });
        }
        Ok(out)
    });
    let mut records = Vec::new();
    for r in per_subject {
        records.extend(r?);
    }

    let cond_mean = |map: &BTreeMap<u32, f64>, c: Condition| {
        let m = labels.members(c);
        m.iter().map(|k| map[k]).sum::<f64>() / m.len() as f64
    };
    let present: Vec<Condition> =
        Condition::ALL.into_iter().filter(|&c| !labels.members(c).is_empty()).collect();
    let truth = SyntheticTruth {
        condition_v: present.iter().map(|&c| (c, cond_mean(&scenario_v, c))).collect(),
        condition_a: present.iter().map(|&c| (c, cond_mean(&scenario_a, c))).collect(),
        scenario_v,
        scenario_a,
        subject_v: (0..n).map(|j| (subject_id(j), uv[j])).collect(),
        subject_a: (0..n).map(|j| (subject_id(j), ua[j])).collect(),
        z: config.start_point,
        t0: config.non_decision_time,
    };
    Ok(SyntheticData { records, truth })
}
